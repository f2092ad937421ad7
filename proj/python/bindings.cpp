#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "blurvid/affine.hpp"
#include "blurvid/error.hpp"
#include "blurvid/formation.hpp"
#include "blurvid/image_io.hpp"
#include "blurvid/metrics.hpp"
#include "blurvid/regularization.hpp"
#include "blurvid/scenes.hpp"
#include "blurvid/segmentation.hpp"
#include "blurvid/solver.hpp"
#include "commands.hpp"

namespace py = pybind11;
using namespace blurvid;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (H, W) arrays are single-channel images; (H, W, C) keep their channels.
Image to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw ShapeError("expected an (H, W) or (H, W, C) array");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  return Image(h, w, c, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Image& img) {
  std::vector<py::ssize_t> shape{img.height(), img.width()};
  if (img.channels() > 1) shape.push_back(img.channels());
  Array out(shape);
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

py::list to_list(const std::vector<Image>& frames) {
  py::list out;
  for (const Image& f : frames) out.append(to_array(f));
  return out;
}

ReferenceState make_state(const Array& fg, const Array& bg, const Array& mask) {
  ReferenceState s{to_image(fg), to_image(bg), to_image(mask)};
  s.validate();
  return s;
}

py::dict terms_dict(const ObjectiveTerms& t) {
  py::dict d;
  d["data"] = t.data;
  d["tv"] = t.tv;
  d["affine_matrix"] = t.affine_matrix;
  d["alpha"] = t.alpha;
  d["total"] = t.total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Affine-modeled video extraction from a single motion-blurred image.";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<SingularTransformError>(m, "SingularTransformError", error.ptr());
  py::register_exception<NonFiniteError>(m, "NonFiniteError", error.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());

  py::class_<AffineParams>(m, "AffineParams")
      .def(py::init<>())
      .def(py::init([](const AffineVector& theta) { return AffineParams{theta}; }), py::arg("theta"))
      .def_readwrite("theta", &AffineParams::theta)
      .def_static("identity", &AffineParams::identity)
      .def_static("translation", &AffineParams::translation, py::arg("tx"), py::arg("ty"))
      .def_static("from_linear", &AffineParams::from_linear, py::arg("a11"), py::arg("a12"), py::arg("a21"),
                  py::arg("a22"), py::arg("tx") = 0.0, py::arg("ty") = 0.0)
      .def("determinant", &AffineParams::determinant)
      .def(py::self == py::self)
      .def("__repr__", [](const AffineParams& p) {
        std::string s = "AffineParams([";
        for (int j = 0; j < 6; ++j) s += (j ? ", " : "") + py::repr(py::float_(p.theta[j])).cast<std::string>();
        return s + "])";
      });

  m.def("invert", &invert, py::arg("params"));
  m.def("compose", &compose, py::arg("a"), py::arg("b"));
  m.def("step_transform", &step_transform, py::arg("params"), py::arg("k"));
  m.def("parse_motion", &cli::parse_motion, py::arg("spec"),
        "Parse 'translate T', 'rotate R', 'zoom S' or 'matrix t11 t12 t13 t21 t22 t23'.");

  m.def(
      "warp", [](const Array& src, const AffineParams& p) {
        const Image img = to_image(src);
        return to_array(grid_sample(img, grid_generate(p, img.height(), img.width())));
      },
      py::arg("src"), py::arg("params"), "Bilinear warp; zero outside the source.");

  m.def("load_image", [](const std::filesystem::path& p) { return to_array(load_image(p)); }, py::arg("path"));
  m.def("save_image", [](const Array& a, const std::filesystem::path& p) { save_image(to_image(a), p); },
        py::arg("image"), py::arg("path"));

  m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_image(a), to_image(b)); }, py::arg("a"),
        py::arg("b"));
  m.def(
      "psnr_masked",
      [](const Array& a, const Array& b, const Array& region) {
        return psnr_masked(to_image(a), to_image(b), to_image(region));
      },
      py::arg("a"), py::arg("b"), py::arg("region"));
  m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_image(a), to_image(b)); }, py::arg("a"),
        py::arg("b"));

  m.def("middle_mask", [](const Array& alpha) { return to_array(middle_mask(to_image(alpha))); }, py::arg("alpha"));
  m.def(
      "propagate_masks",
      [](const Array& mask, const AffineParams& p, int n) { return to_list(propagate_masks(to_image(mask), p, n)); },
      py::arg("middle"), py::arg("params"), py::arg("n"));
  m.def(
      "synth_alpha",
      [](const Array& mask, const AffineParams& p, int n) { return to_array(synth_alpha(to_image(mask), p, n)); },
      py::arg("middle"), py::arg("params"), py::arg("n"));

  m.def(
      "render_frames",
      [](const Array& fg, const Array& bg, const Array& mask, const AffineParams& p, int n) {
        return to_list(render_frames(make_state(fg, bg, mask), p, n).frames);
      },
      py::arg("foreground"), py::arg("background"), py::arg("middle_mask"), py::arg("params"), py::arg("n"));
  m.def(
      "blur_forward",
      [](const Array& fg, const Array& bg, const Array& mask, const AffineParams& p, int n) {
        return to_array(blur_forward(make_state(fg, bg, mask), p, n));
      },
      py::arg("foreground"), py::arg("background"), py::arg("middle_mask"), py::arg("params"), py::arg("n"));

  m.def(
      "synthesize",
      [](const Array& sharp, const Array& alpha, const AffineParams& p, int n, double noise, std::uint64_t seed) {
        const SyntheticCase c = synthesize_case(to_image(sharp), to_image(alpha), p, n, noise, seed);
        py::dict d;
        d["blurred"] = to_array(c.blurred);
        d["alpha"] = to_array(c.alpha);
        d["frames"] = to_list(c.truth.frames);
        d["foreground"] = to_array(c.state.foreground);
        d["background"] = to_array(c.state.background);
        d["middle_mask"] = to_array(c.state.middle_mask);
        return d;
      },
      py::arg("sharp"), py::arg("alpha"), py::arg("params"), py::arg("n") = 7, py::arg("noise") = 0.0,
      py::arg("seed") = 0);

  m.def(
      "disk_on_texture",
      [](int size, int channels, std::uint64_t seed, double radius, double cx, double cy) {
        const Scene s = disk_on_texture(size, size, channels, seed, radius, cx, cy);
        return py::make_tuple(to_array(s.sharp), to_array(s.mask));
      },
      py::arg("size") = 128, py::arg("channels") = 3, py::arg("seed") = 0, py::arg("radius") = 0.25,
      py::arg("center_x") = 0.5, py::arg("center_y") = 0.5, "Returns (sharp, mask).");

  m.def(
      "tv_value",
      [](const Array& img, const std::string& variant, double eps) {
        return tv_value(to_image(img), TvNorm{parse_tv_variant(variant), eps});
      },
      py::arg("image"), py::arg("variant") = "l0", py::arg("epsilon") = 1.0);

  m.def("default_config", [] { return cli::config_to_json(SolverConfig{}).dump(); },
        "Default solver configuration as a JSON string.");

  m.def(
      "extract",
      [](const Array& blurred, const Array& alpha, const std::string& config_json) {
        const SolverConfig cfg =
            config_json.empty() ? SolverConfig{} : cli::config_from_json(nlohmann::json::parse(config_json));
        ExtractionResult r;
        {
          py::gil_scoped_release release;
          r = extract(to_image(blurred), to_image(alpha), cfg);
        }
        py::dict d;
        d["frames"] = to_list(r.clip.frames);
        d["params"] = r.params;
        d["params_init"] = r.params_init;
        d["foreground"] = to_array(r.state.foreground);
        d["background"] = to_array(r.state.background);
        d["middle_mask"] = to_array(r.state.middle_mask);
        py::list trace;
        for (const auto& scale : r.loss_trace) {
          py::list s;
          for (const ObjectiveTerms& t : scale) s.append(terms_dict(t));
          trace.append(s);
        }
        d["loss_trace"] = trace;
        return d;
      },
      py::arg("blurred"), py::arg("alpha"), py::arg("config") = "",
      "Recover the frames. `config` is a JSON object with solver keys.");

  m.def(
      "main",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"blurvid"};
        for (const std::string& a : args) argv.push_back(a.c_str());
        py::gil_scoped_release release;
        return cli::main_entry(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Run the command-line interface; returns the exit status.");
}
