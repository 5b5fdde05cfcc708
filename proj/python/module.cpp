// Python bindings for the deconvolution core. Joint signals are (N, 12)
// arrays, frames are (2, height, width) arrays of photon counts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstring>

#include "sbd/basis.hpp"
#include "sbd/design_operator.hpp"
#include "sbd/errors.hpp"
#include "sbd/forward_model.hpp"
#include "sbd/moments.hpp"
#include "sbd/objective.hpp"
#include "sbd/orientation.hpp"
#include "sbd/pipeline.hpp"
#include "sbd/solver.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

sbd::JointSignal to_signal(const Array& a) {
  if (a.ndim() != 2 || a.shape(1) != sbd::kGroupSize)
    throw sbd::ShapeError("joint signal must have shape (N, 12)");
  sbd::JointSignal f(static_cast<int>(a.shape(0)));
  std::memcpy(f.values().data(), a.data(), f.values().size() * sizeof(double));
  return f;
}

Array from_signal(const sbd::JointSignal& f) {
  Array out({static_cast<py::ssize_t>(f.groups()), static_cast<py::ssize_t>(sbd::kGroupSize)});
  std::memcpy(out.mutable_data(), f.values().data(), f.values().size() * sizeof(double));
  return out;
}

Array from_image(std::span<const double> px, int width, int height) {
  Array out({static_cast<py::ssize_t>(sbd::kNumChannels), static_cast<py::ssize_t>(height),
             static_cast<py::ssize_t>(width)});
  std::copy(px.begin(), px.end(), out.mutable_data());
  return out;
}

std::vector<double> to_pixels(const Array& a, const sbd::DesignOperator& op) {
  if (static_cast<std::size_t>(a.size()) != op.pixel_count())
    throw sbd::ShapeError("image must have 2 * height * width entries");
  return {a.data(), a.data() + a.size()};
}

sbd::Frame to_frame(const Array& a) {
  if (a.ndim() != 3 || a.shape(0) != sbd::kNumChannels)
    throw sbd::ShapeError("frame must have shape (2, height, width)");
  sbd::Frame f(static_cast<int>(a.shape(2)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), f.pixels.begin());
  return f;
}

Array frame_array(const sbd::Frame& f) { return from_image(f.pixels, f.width, f.height); }

sbd::Emitter to_emitter(const py::handle& h) {
  const auto d = h.cast<py::dict>();
  sbd::Emitter e;
  e.s = d["s"].cast<double>();
  e.r = {d.contains("x_nm") ? d["x_nm"].cast<double>() : 0.0,
         d.contains("y_nm") ? d["y_nm"].cast<double>() : 0.0};
  if (d.contains("moments")) {
    const auto m = d["moments"].cast<std::array<double, 6>>();
    e.orientation = sbd::SecondMoments{m};
  } else {
    e.orientation = sbd::ConeOrientation{d.contains("theta") ? d["theta"].cast<double>() : 0.0,
                                         d.contains("phi") ? d["phi"].cast<double>() : 0.0,
                                         d.contains("gamma") ? d["gamma"].cast<double>() : 1.0};
  }
  return e;
}

py::dict estimate_dict(const sbd::EmitterEstimate& e) {
  py::dict d;
  d["s"] = e.s;
  d["x_nm"] = e.r.x_nm;
  d["y_nm"] = e.r.y_nm;
  d["eta"] = e.eta;
  d["moments"] = e.M.m;
  d["theta"] = e.theta;
  d["phi"] = e.phi;
  d["gamma"] = e.gamma;
  d["cone_half_angle"] = e.cone_half_angle;
  d["nll"] = e.nll;
  d["grid_index"] = e.grid_index;
  d["flags"] = e.flags;
  return d;
}

sbd::SolverConfig solver_config(double lambda, double lambda0, double tau, int max_iterations,
                                double tolerance, double background) {
  sbd::SolverConfig cfg;
  cfg.lambda = lambda;
  cfg.lambda0 = lambda0;
  cfg.tau = tau;
  cfg.max_iterations = max_iterations;
  cfg.tolerance = tolerance;
  cfg.background = background;
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Group-sparse Poisson deconvolution of polarized single-molecule images.";

  auto base = py::register_exception<sbd::Error>(m, "Error");
  py::register_exception<sbd::ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<sbd::FormatError>(m, "FormatError", base.ptr());
  py::register_exception<sbd::ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<sbd::PlacementError>(m, "PlacementError", base.ptr());
  py::register_exception<sbd::EvaluationError>(m, "EvaluationError", base.ptr());
  py::register_exception<sbd::SolverError>(m, "SolverError", base.ptr());
  py::register_exception<sbd::ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<sbd::EstimationError>(m, "EstimationError", base.ptr());

  m.attr("GROUP_SIZE") = sbd::kGroupSize;

  py::class_<sbd::BasisGeneratorParams>(m, "BasisParams")
      .def(py::init<>())
      .def_readwrite("oversampling", &sbd::BasisGeneratorParams::oversampling)
      .def_readwrite("pixel_size_nm", &sbd::BasisGeneratorParams::pixel_size_nm)
      .def_readwrite("sigma_px", &sbd::BasisGeneratorParams::sigma_px)
      .def_readwrite("lobe_radius_px", &sbd::BasisGeneratorParams::lobe_radius_px)
      .def_readwrite("extent_px", &sbd::BasisGeneratorParams::extent_px);

  py::class_<sbd::BasisStack>(m, "BasisStack")
      .def_property_readonly("oversampling", &sbd::BasisStack::oversampling)
      .def_property_readonly("pixel_size_nm", &sbd::BasisStack::pixel_size_nm)
      .def_property_readonly("width", &sbd::BasisStack::width)
      .def_property_readonly("height", &sbd::BasisStack::height)
      .def("energy", &sbd::BasisStack::energy, py::arg("j"))
      .def(
          "image",
          [](const sbd::BasisStack& b, int j) {
            if (j < 0 || j >= sbd::kNumBases) throw sbd::ShapeError("basis index out of range");
            Array out({2, b.height(), b.width()});
            auto x = b.image(j, sbd::Channel::XPol);
            auto y = b.image(j, sbd::Channel::YPol);
            std::copy(x.begin(), x.end(), out.mutable_data());
            std::copy(y.begin(), y.end(), out.mutable_data() + x.size());
            return out;
          },
          py::arg("j"), "Both channels of basis j as a (2, height, width) array.")
      .def("save", [](const sbd::BasisStack& b, const std::string& path) { sbd::save_basis(b, path); });

  m.def("generate_synthetic_basis", &sbd::generate_synthetic_basis,
        py::arg("params") = sbd::BasisGeneratorParams{});
  m.def("load_basis", [](const std::string& path) { return sbd::load_basis(path); }, py::arg("path"));

  py::class_<sbd::DesignOperator>(m, "DesignOperator")
      .def(py::init([](const sbd::BasisStack& basis, int width_px, int height_px, int step_subpx) {
             return sbd::DesignOperator(basis, sbd::GridSpec{width_px, height_px, step_subpx});
           }),
           py::arg("basis"), py::arg("width_px"), py::arg("height_px"), py::arg("step_subpx") = 0)
      .def_property_readonly("grid_size", &sbd::DesignOperator::grid_size)
      .def_property_readonly("grid_shape",
                             [](const sbd::DesignOperator& op) {
                               return py::make_tuple(op.geometry().grid_height, op.geometry().grid_width);
                             })
      .def_property_readonly("image_shape",
                             [](const sbd::DesignOperator& op) {
                               return py::make_tuple(2, op.geometry().image_height, op.geometry().image_width);
                             })
      .def_property_readonly("rho_nm", [](const sbd::DesignOperator& op) { return op.geometry().rho_nm(); })
      .def_property_readonly("rho_subpx",
                             [](const sbd::DesignOperator& op) { return op.geometry().rho_subpx(); })
      .def(
          "grid_point",
          [](const sbd::DesignOperator& op, int i) {
            const auto p = op.geometry().grid_point(i);
            return py::make_tuple(p.x_nm, p.y_nm);
          },
          py::arg("i"))
      .def(
          "apply",
          [](const sbd::DesignOperator& op, const Array& f) {
            const auto sig = to_signal(f);
            if (sig.groups() != op.grid_size()) throw sbd::ShapeError("signal has the wrong group count");
            std::vector<double> out(op.pixel_count());
            op.apply(sig, out);
            return from_image(out, op.geometry().image_width, op.geometry().image_height);
          },
          py::arg("signal"))
      .def(
          "adjoint",
          [](const sbd::DesignOperator& op, const Array& image) {
            const auto px = to_pixels(image, op);
            sbd::JointSignal out(op.grid_size());
            op.adjoint(px, out);
            return from_signal(out);
          },
          py::arg("image"));

  m.def("moments_from_cone",
        [](double theta, double phi, double gamma) { return sbd::moments_from_cone(theta, phi, gamma).m; },
        py::arg("theta"), py::arg("phi"), py::arg("gamma"));
  m.def("gamma_from_cone_angle", &sbd::gamma_from_cone_angle, py::arg("alpha"));
  m.def("cone_angle_from_gamma", &sbd::cone_angle_from_gamma, py::arg("gamma"));
  m.def(
      "moments_to_orientation",
      [](const std::array<double, 6>& eta, double gap) {
        const auto o = sbd::moments_to_orientation(eta, gap);
        py::dict d;
        d["s"] = o.s;
        d["moments"] = o.M.m;
        d["theta"] = o.theta;
        d["phi"] = o.phi;
        d["gamma"] = o.gamma;
        d["cone_half_angle"] = o.cone_half_angle;
        d["eigen_gap"] = o.eigen_gap;
        d["indeterminate"] = o.indeterminate;
        return d;
      },
      py::arg("eta"), py::arg("indeterminate_gap") = 1e-3);

  m.def(
      "render_scene",
      [](const sbd::DesignOperator& op, const py::list& emitters, double background) {
        std::vector<sbd::Emitter> es;
        for (const auto& h : emitters) es.push_back(to_emitter(h));
        return frame_array(sbd::render_scene(es, op, sbd::Background(background)));
      },
      py::arg("op"), py::arg("emitters"), py::arg("background") = 0.0,
      "Noiseless frame; emitters are dicts with s, x_nm, y_nm and theta/phi/gamma or moments.");
  m.def(
      "sample_poisson", [](const Array& mean, std::uint64_t seed) {
        return frame_array(sbd::sample_poisson(to_frame(mean), seed));
      },
      py::arg("mean"), py::arg("seed"));

  m.def("group_norm", [](const Array& f) { return sbd::group_norm(to_signal(f)); }, py::arg("signal"));
  m.def(
      "prox_group_norm", [](const Array& f, double t) { return from_signal(sbd::prox_group_norm(to_signal(f), t)); },
      py::arg("signal"), py::arg("threshold"));
  m.def(
      "project_soc", [](const Array& f, double rho) { return from_signal(sbd::project_soc(to_signal(f), rho)); },
      py::arg("signal"), py::arg("rho"));
  m.def(
      "neg_log_likelihood",
      [](const Array& f, const sbd::DesignOperator& op, const Array& counts, double background) {
        const auto g = to_pixels(counts, op);
        return sbd::neg_log_likelihood(to_signal(f), op, g, sbd::Background(background));
      },
      py::arg("signal"), py::arg("op"), py::arg("counts"), py::arg("background"));

  m.def(
      "deconvolve",
      [](const Array& counts, const sbd::DesignOperator& op, double background, double lambda_,
         double lambda0, double tau, int max_iterations, double tolerance) {
        const auto g = to_pixels(counts, op);
        const auto cfg = solver_config(lambda_, lambda0, tau, max_iterations, tolerance, background);
        sbd::DeconvolutionResult r;
        {
          py::gil_scoped_release release;
          r = sbd::deconvolve(g, op, cfg);
        }
        py::dict d;
        d["signal"] = from_signal(r.signal);
        d["iterate"] = from_signal(r.iterate);
        d["iterations"] = r.iterations;
        d["converged"] = r.converged;
        d["lambda"] = r.lambda;
        d["tau"] = r.tau;
        d["initial_objective"] = r.initial_objective;
        d["final_objective"] = r.final_objective;
        return d;
      },
      py::arg("counts"), py::arg("op"), py::arg("background"), py::arg("lambda_") = 0.0,
      py::arg("lambda0") = 2.0, py::arg("tau") = 0.0, py::arg("max_iterations") = 2000,
      py::arg("tolerance") = 1e-6);

  m.def(
      "analyze_frame",
      [](const Array& frame, const sbd::DesignOperator& op, py::object background, double threshold,
         int min_separation, bool pooling) {
        sbd::AnalysisOptions opts;
        if (background.is_none()) {
          opts.background_mode = sbd::BackgroundMode::BorderMedian;
        } else {
          opts.background_mode = sbd::BackgroundMode::Fixed;
          opts.background = background.cast<double>();
        }
        opts.detection.threshold = threshold;
        opts.detection.min_separation = min_separation;
        opts.pooling = pooling;
        const auto f = to_frame(frame);
        sbd::FrameAnalysis a;
        {
          py::gil_scoped_release release;
          a = sbd::analyze_frame(f, op, opts);
        }
        py::list out;
        for (const auto& e : a.refined.emitters) out.append(estimate_dict(e));
        return out;
      },
      py::arg("frame"), py::arg("op"), py::arg("background") = py::none(), py::arg("threshold") = 0.3,
      py::arg("min_separation") = 2, py::arg("pooling") = true,
      "Localizes emitters in one frame; background None estimates it from the border.");
}
