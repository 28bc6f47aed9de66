#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "patchnet/box_geom.hpp"
#include "patchnet/camera.hpp"
#include "patchnet/equivalence.hpp"
#include "patchnet/error.hpp"
#include "patchnet/kitti_eval.hpp"
#include "patchnet/kitti_io.hpp"
#include "patchnet/netfunc.hpp"
#include "patchnet/patch_repr.hpp"

namespace py = pybind11;
using namespace patchnet;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

DepthPatch patch_from_array(const DoubleArray& depth, std::size_t origin_u,
                            std::size_t origin_v) {
  if (depth.ndim() != 2) throw Error(ErrorKind::Shape, "depth must be a 2-D array");
  const auto h = static_cast<std::size_t>(depth.shape(0));
  const auto w = static_cast<std::size_t>(depth.shape(1));
  std::vector<double> values(depth.data(), depth.data() + h * w);
  return DepthPatch::from_values(w, h, origin_u, origin_v, std::move(values));
}

py::array_t<double> tensor_to_array(const PatchTensor& t) {
  py::array_t<double> out({t.n, t.n, t.channels()});
  std::copy(t.values.begin(), t.values.end(), out.mutable_data());
  return out;
}

PatchTensor tensor_from_array(const DoubleArray& a, ChannelConfig cfg) {
  if (a.ndim() != 3 || a.shape(0) != a.shape(1) ||
      static_cast<std::size_t>(a.shape(2)) != channel_count(cfg)) {
    throw Error(ErrorKind::Shape, "tensor must have shape (n, n, channels)");
  }
  PatchTensor t;
  t.n = static_cast<std::size_t>(a.shape(0));
  t.config = cfg;
  t.values.assign(a.data(), a.data() + a.size());
  return t;
}

py::array_t<double> vector_to_array(const Eigen::VectorXd& v) {
  py::array_t<double> out(v.size());
  std::copy(v.data(), v.data() + v.size(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Depth-patch geometry, set/grid network equivalence and KITTI-style evaluation";

  py::register_exception<Error>(m, "PatchnetError", PyExc_ValueError);

  py::enum_<ChannelConfig>(m, "ChannelConfig")
      .value("Z", ChannelConfig::Z)
      .value("XZ", ChannelConfig::XZ)
      .value("XYZ", ChannelConfig::XYZ)
      .value("UVZ", ChannelConfig::UVZ);

  py::enum_<ProjectionModel>(m, "ProjectionModel")
      .value("PINHOLE", ProjectionModel::Pinhole)
      .value("RECTIFIED", ProjectionModel::Rectified);

  py::enum_<IouKind>(m, "IouKind").value("BOX3D", IouKind::Box3d).value("BEV", IouKind::Bev);

  py::class_<CameraIntrinsics>(m, "CameraIntrinsics")
      .def(py::init([](double fu, double fv, double cx, double cy, double tx, double ty) {
             return CameraIntrinsics{fu, fv, cx, cy, tx, ty};
           }),
           py::arg("fu"), py::arg("fv"), py::arg("cx"), py::arg("cy"), py::arg("tx") = 0.0,
           py::arg("ty") = 0.0)
      .def_readwrite("fu", &CameraIntrinsics::fu)
      .def_readwrite("fv", &CameraIntrinsics::fv)
      .def_readwrite("cx", &CameraIntrinsics::cx)
      .def_readwrite("cy", &CameraIntrinsics::cy)
      .def_readwrite("tx", &CameraIntrinsics::tx)
      .def_readwrite("ty", &CameraIntrinsics::ty);

  py::class_<Box3D>(m, "Box3D")
      .def(py::init([](double x, double y, double z, double h, double w, double l,
                       double theta) { return Box3D{x, y, z, h, w, l, theta}; }),
           py::arg("x"), py::arg("y"), py::arg("z"), py::arg("h"), py::arg("w"),
           py::arg("l"), py::arg("theta"))
      .def_readwrite("x", &Box3D::x)
      .def_readwrite("y", &Box3D::y)
      .def_readwrite("z", &Box3D::z)
      .def_readwrite("h", &Box3D::h)
      .def_readwrite("w", &Box3D::w)
      .def_readwrite("l", &Box3D::l)
      .def_readwrite("theta", &Box3D::theta)
      .def("__repr__", [](const Box3D& b) {
        return "Box3D(" + std::to_string(b.x) + ", " + std::to_string(b.y) + ", " +
               std::to_string(b.z) + ", " + std::to_string(b.h) + ", " +
               std::to_string(b.w) + ", " + std::to_string(b.l) + ", " +
               std::to_string(b.theta) + ")";
      });

  m.def(
      "backproject",
      [](double u, double v, double d, const CameraIntrinsics& k, ProjectionModel model) {
        const Point3 p = backproject({u, v, d}, k, model);
        return py::make_tuple(p.x, p.y, p.z);
      },
      py::arg("u"), py::arg("v"), py::arg("d"), py::arg("k"),
      py::arg("model") = ProjectionModel::Pinhole);

  m.def(
      "project",
      [](double x, double y, double z, const CameraIntrinsics& k, ProjectionModel model) {
        const PixelDepth p = project({x, y, z}, k, model);
        return py::make_tuple(p.u, p.v, p.d);
      },
      py::arg("x"), py::arg("y"), py::arg("z"), py::arg("k"),
      py::arg("model") = ProjectionModel::Pinhole);

  m.def(
      "build_patch_tensor",
      [](const DoubleArray& depth, const CameraIntrinsics& k, ChannelConfig cfg,
         std::size_t origin_u, std::size_t origin_v, ProjectionModel model) {
        return tensor_to_array(
            build_patch_tensor(patch_from_array(depth, origin_u, origin_v), k, cfg, model));
      },
      py::arg("depth"), py::arg("k"), py::arg("config") = ChannelConfig::XYZ,
      py::arg("origin_u") = 0, py::arg("origin_v") = 0,
      py::arg("model") = ProjectionModel::Pinhole,
      "(n, n) depth patch -> (n, n, channels) tensor; depth is the last channel.");

  m.def(
      "resample_patch",
      [](const DoubleArray& depth, std::size_t n) {
        const DepthPatch p = resample_patch(patch_from_array(depth, 0, 0), n);
        py::array_t<double> out({p.height, p.width});
        std::copy(p.values.begin(), p.values.end(), out.mutable_data());
        return out;
      },
      py::arg("depth"), py::arg("n"));

  m.def(
      "patch_to_pointset",
      [](const DoubleArray& tensor, ChannelConfig cfg, bool drop_invalid) {
        const PointSet s = patch_to_pointset(tensor_from_array(tensor, cfg), drop_invalid);
        py::array_t<double> out({s.size(), s.dim});
        std::copy(s.values.begin(), s.values.end(), out.mutable_data());
        return out;
      },
      py::arg("tensor"), py::arg("config"), py::arg("drop_invalid") = false);

  m.def(
      "foreground_mask",
      [](const DoubleArray& depth, double offset) {
        const BinaryMask mk = make_foreground_mask(patch_from_array(depth, 0, 0), offset);
        py::array_t<std::uint8_t> out({mk.height, mk.width});
        std::copy(mk.values.begin(), mk.values.end(), out.mutable_data());
        return out;
      },
      py::arg("depth"), py::arg("offset") = kDefaultMaskOffset);

  m.def(
      "set_and_grid_outputs",
      [](const DoubleArray& tensor, ChannelConfig cfg, const std::vector<std::size_t>& h_widths,
         const std::vector<std::size_t>& gamma_widths, std::uint64_t seed) {
        const PatchTensor t = tensor_from_array(tensor, cfg);
        const MlpParams h = MlpParams::random(h_widths, seed);
        const MlpParams gamma = MlpParams::random(gamma_widths, seed + 1, Activation::Identity);
        return py::make_tuple(vector_to_array(set_function(patch_to_pointset(t), h, gamma)),
                              vector_to_array(grid_function(t, h, gamma)));
      },
      py::arg("tensor"), py::arg("config"), py::arg("h_widths"), py::arg("gamma_widths"),
      py::arg("seed") = 0,
      "Runs the point-set and the 1x1-conv grid network with shared random weights.");

  m.def(
      "equivalence_check",
      [](std::size_t trials, std::uint64_t seed, bool inject_fault) {
        EquivalenceOptions opts;
        opts.trials = trials;
        opts.seed = seed;
        opts.inject_fault = inject_fault;
        return run_equivalence_check(opts).max_deviation;
      },
      py::arg("trials") = 100, py::arg("seed") = 0, py::arg("inject_fault") = false,
      "Maximum |set - grid| deviation over the random trials.");

  m.def("iou_bev", &iou_bev, py::arg("a"), py::arg("b"));
  m.def("iou_3d", &iou_3d, py::arg("a"), py::arg("b"));
  m.def("corner_loss", &corner_loss, py::arg("pred"), py::arg("gt"));
  m.def(
      "detection_loss",
      [](const Box3D& pred, const Box3D& gt, double corner_weight) {
        const LossBreakdown l = detection_loss(pred, gt, corner_weight);
        py::dict d;
        d["center"] = l.center;
        d["size"] = l.size;
        d["heading"] = l.heading;
        d["corner"] = l.corner;
        d["total"] = l.total;
        return d;
      },
      py::arg("pred"), py::arg("gt"), py::arg("corner_weight") = kDefaultCornerWeight);

  m.def(
      "average_precision",
      [](const std::vector<bool>& ranked_tp, std::size_t num_gt) {
        std::vector<RankedFlag> flags;
        double score = 1.0;
        for (bool tp : ranked_tp) {
          flags.push_back({score, tp});
          score *= 0.5;
        }
        const PrCurve c = precision_recall(flags, num_gt);
        return py::make_tuple(ap_11(c), ap_40(c));
      },
      py::arg("ranked_tp"), py::arg("num_gt"),
      "(AP|R11, AP|R40) for a TP/FP list already sorted by descending score.");

  m.def(
      "route_by_distance",
      [](double z, double near, double far) {
        return route_by_distance(Box3D{0, 0, z, 1, 1, 1, 0}, {near, far});
      },
      py::arg("z"), py::arg("near") = 30.0, py::arg("far") = 50.0);

  m.def(
      "decode_depth_png",
      [](const std::string& path) {
        const DepthMap d = read_depth_map(path);
        py::array_t<double> out({d.height, d.width});
        std::copy(d.values.begin(), d.values.end(), out.mutable_data());
        return out;
      },
      py::arg("path"), "16-bit PNG -> metres (raw / 256).");

  m.def(
      "intrinsics_from_calib",
      [](const std::string& text, const std::string& key) {
        return parse_calib_file(text).intrinsics(key);
      },
      py::arg("text"), py::arg("key") = "P2");
}
