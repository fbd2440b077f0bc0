#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "handtrack/cluster.hpp"
#include "handtrack/config.hpp"
#include "handtrack/errors.hpp"
#include "handtrack/homogeneity.hpp"
#include "handtrack/sequence_io.hpp"
#include "handtrack/synth.hpp"
#include "handtrack/tracker.hpp"

namespace py = pybind11;
using namespace handtrack;

namespace {

using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;

CameraIntrinsics intrinsics_from(py::ssize_t height, py::ssize_t width, const py::object& k) {
    if (k.is_none()) {
        CameraIntrinsics d = default_intrinsics();
        d.width = static_cast<std::uint32_t>(width);
        d.height = static_cast<std::uint32_t>(height);
        d.cx = (width - 1) / 2.0;
        d.cy = (height - 1) / 2.0;
        return d;
    }
    const auto t = k.cast<std::tuple<double, double, double, double>>();
    CameraIntrinsics c{static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height), std::get<0>(t),
                       std::get<1>(t), std::get<2>(t), std::get<3>(t)};
    c.validate();
    return c;
}

Frame frame_from(const F64& distance, const F64& intensity, const py::object& k, std::uint32_t index = 0) {
    if (distance.ndim() != 2 || intensity.ndim() != 2 || distance.shape(0) != intensity.shape(0) ||
        distance.shape(1) != intensity.shape(1))
        throw InvalidInput("distance and intensity must be 2-D arrays of the same shape");
    Frame f(intrinsics_from(distance.shape(0), distance.shape(1), k), index);
    std::copy(distance.data(), distance.data() + distance.size(), f.distance.begin());
    std::copy(intensity.data(), intensity.data() + intensity.size(), f.intensity.begin());
    f.validate();
    return f;
}

py::dict region_dict(const Region& r) {
    py::dict d;
    d["id"] = r.id;
    d["pixel_count"] = r.pixel_count;
    d["mean_z"] = r.mean_z;
    d["mean_d"] = r.mean_d;
    d["mean_phi"] = r.mean_phi;
    d["centroid"] = py::make_tuple(r.centroid.x, r.centroid.y, r.centroid.z);
    d["neighbors"] = r.neighbors;
    return d;
}

py::tuple segmentation_tuple(const Segmentation& seg) {
    py::array_t<std::uint32_t> labels({py::ssize_t(seg.height), py::ssize_t(seg.width)});
    std::copy(seg.labels.begin(), seg.labels.end(), labels.mutable_data());
    py::list regions;
    for (const auto& r : seg.regions) regions.append(region_dict(r));
    return py::make_tuple(labels, regions);
}

PipelineConfig config_from(const py::dict& overrides) {
    PipelineConfig c;
    for (auto [k, v] : overrides) set_config_value(c, py::str(k), py::str(v));
    c.validate();
    return c;
}

ClipRange clip_from(const py::object& clip) {
    if (clip.is_none()) return ClipRange::unbounded();
    const auto [lo, hi] = clip.cast<std::pair<double, double>>();
    return ClipRange::bounded(lo, hi);
}

py::array_t<double> stack(const std::vector<Frame>& frames, bool intensity) {
    const auto& k = frames.front().intrinsics;
    py::array_t<double> out({py::ssize_t(frames.size()), py::ssize_t(k.height), py::ssize_t(k.width)});
    double* dst = out.mutable_data();
    for (const auto& f : frames) {
        const auto& src = intensity ? f.intensity : f.distance;
        dst = std::copy(src.begin(), src.end(), dst);
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_handtrack, m) {
    m.doc() = "Hand segmentation and tracking on range-intensity frames";
    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);

    m.def("phi", [](double d, double intensity) { return phi(d, intensity); }, py::arg("d"), py::arg("intensity"),
          "Fused range-intensity measure arctan(d * sqrt(I)).");

    m.def(
        "phi_map",
        [](const F64& distance, const F64& intensity, const std::string& measure) {
            const Frame f = frame_from(distance, intensity, py::none());
            const auto phis = phi_map(f, parse_measure(measure));
            py::array_t<double> out({distance.shape(0), distance.shape(1)});
            std::copy(phis.begin(), phis.end(), out.mutable_data());
            return out;
        },
        py::arg("distance"), py::arg("intensity"), py::arg("measure") = "fused");

    m.def(
        "cluster",
        [](const F64& distance, const F64& intensity, const py::object& intrinsics, const py::object& clip,
           const py::dict& config, bool oracle) {
            const PipelineConfig c = config_from(config);
            const Frame f = frame_from(distance, intensity, intrinsics);
            Segmentation seg;
            {
                py::gil_scoped_release release;
                seg = oracle ? cluster_oracle(f, clip_from(clip), c.cluster_options())
                             : cluster(f, clip_from(clip), c.cluster_options());
            }
            return segmentation_tuple(seg);
        },
        py::arg("distance"), py::arg("intensity"), py::arg("intrinsics") = py::none(), py::arg("clip") = py::none(),
        py::arg("config") = py::dict(), py::arg("oracle") = false,
        "Clusters one frame. Returns (labels, regions). intrinsics is (fx, fy, cx, cy).");

    m.def(
        "track",
        [](const F64& distance, const F64& intensity, const py::object& intrinsics, const py::dict& config) {
            if (distance.ndim() != 3 || intensity.ndim() != 3 || distance.shape(0) != intensity.shape(0) ||
                distance.shape(1) != intensity.shape(1) || distance.shape(2) != intensity.shape(2))
                throw InvalidInput("distance and intensity must be 3-D stacks of the same shape");
            const PipelineConfig c = config_from(config);
            const auto n = distance.shape(0), h = distance.shape(1), w = distance.shape(2);
            const CameraIntrinsics k = intrinsics_from(h, w, intrinsics);
            std::vector<Frame> frames;
            for (py::ssize_t i = 0; i < n; ++i) {
                Frame f(k, static_cast<std::uint32_t>(i));
                std::copy(distance.data() + i * h * w, distance.data() + (i + 1) * h * w, f.distance.begin());
                std::copy(intensity.data() + i * h * w, intensity.data() + (i + 1) * h * w, f.intensity.begin());
                frames.push_back(std::move(f));
            }
            PipelineResult result;
            {
                py::gil_scoped_release release;
                result = run_pipeline(frames, c.cluster_options(), c.tracker);
            }
            py::list records;
            for (const auto& r : result.log) records.append(format_track_record(r));
            return records;
        },
        py::arg("distance"), py::arg("intensity"), py::arg("intrinsics") = py::none(), py::arg("config") = py::dict(),
        "Runs the tracking pipeline. Returns one key=value record per frame.");

    m.def(
        "parse_track_record",
        [](const std::string& line) {
            const TrackRecord r = parse_track_record(line);
            py::dict d;
            d["frame"] = r.frame_index;
            d["phase"] = to_string(r.phase);
            d["event"] = to_string(r.event);
            d["d_flag"] = r.d_flag;
            d["clip"] = py::make_tuple(r.clip.r_min, r.clip.r_max);
            for (int slot : {1, 2}) {
                const HandState& h = slot == 1 ? r.hand1 : r.hand2;
                py::dict hd;
                hd["visible"] = h.visible;
                hd["id"] = h.id;
                hd["pixel_count"] = h.pixel_count;
                hd["phi"] = h.phi;
                hd["pos"] = py::make_tuple(h.pos.x, h.pos.y, h.pos.z);
                hd["mean_d"] = h.mean_d;
                d[slot == 1 ? "hand1" : "hand2"] = hd;
            }
            return d;
        },
        py::arg("line"));

    m.def("scenario_names", &scenario_names);

    m.def(
        "make_scenario",
        [](const std::string& name, std::uint64_t seed) {
            const ScenarioData data = make_scenario(name, seed);
            const auto& k = data.scenario.intrinsics;
            py::array_t<std::uint16_t> labels(
                {py::ssize_t(data.frames.size()), py::ssize_t(k.height), py::ssize_t(k.width)});
            std::uint16_t* dst = labels.mutable_data();
            for (const auto& f : data.truth.frames) dst = std::copy(f.labels.begin(), f.labels.end(), dst);
            py::dict out;
            out["distance"] = stack(data.frames, false);
            out["intensity"] = stack(data.frames, true);
            out["labels"] = labels;
            out["intrinsics"] = py::make_tuple(k.fx, k.fy, k.cx, k.cy);
            out["hands"] = data.truth.hand_identities();
            return out;
        },
        py::arg("name"), py::arg("seed") = 1);

    m.def(
        "load_sequence",
        [](const std::string& path) {
            const auto frames = load_sequence(path);
            if (frames.empty()) throw InvalidInput("sequence has no frames");
            const auto& k = frames.front().intrinsics;
            return py::make_tuple(stack(frames, false), stack(frames, true), py::make_tuple(k.fx, k.fy, k.cx, k.cy));
        },
        py::arg("path"), "Returns (distance, intensity, (fx, fy, cx, cy)).");

    m.def("default_config", [] {
        py::dict d;
        const PipelineConfig c;
        for (const auto& key : config_keys()) d[py::str(key)] = get_config_value(c, key);
        return d;
    });
}
