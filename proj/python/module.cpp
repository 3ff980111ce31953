#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pabc/experiments.hpp"

namespace py = pybind11;
using namespace pabc;

PYBIND11_MODULE(_pabc, m) {
  m.doc() = "batch-parallel ABC-SMC core";

  py::enum_<KernelKind>(m, "KernelKind")
      .value("mcmc", KernelKind::mcmc)
      .value("bdss", KernelKind::bdss);

  py::class_<ParameterVector>(m, "ParameterVector")
      .def(py::init<>())
      .def_readwrite("alpha0", &ParameterVector::alpha0)
      .def_readwrite("alpha", &ParameterVector::alpha)
      .def_readwrite("n", &ParameterVector::n)
      .def_readwrite("beta", &ParameterVector::beta)
      .def_readwrite("gamma", &ParameterVector::gamma)
      .def_readwrite("delta", &ParameterVector::delta)
      .def_readwrite("eta", &ParameterVector::eta)
      .def_readwrite("kappa", &ParameterVector::kappa)
      .def_static("from_unit", &ParameterVector::from_unit)
      .def("to_unit", &ParameterVector::to_unit)
      .def("to_array", &ParameterVector::to_array);

  py::class_<ObservedDay>(m, "ObservedDay")
      .def(py::init<>())
      .def_readwrite("A", &ObservedDay::A)
      .def_readwrite("R", &ObservedDay::R)
      .def_readwrite("D", &ObservedDay::D);

  py::class_<SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("population", &SimConfig::population)
      .def_readwrite("days", &SimConfig::days)
      .def_readwrite("initial_observed", &SimConfig::initial_observed)
      .def_readwrite("record_full", &SimConfig::record_full);

  py::class_<CaseDataSeries>(m, "CaseDataSeries")
      .def(py::init<>())
      .def_readwrite("population", &CaseDataSeries::population)
      .def_readwrite("A", &CaseDataSeries::A)
      .def_readwrite("R", &CaseDataSeries::R)
      .def_readwrite("D", &CaseDataSeries::D)
      .def("days", &CaseDataSeries::days)
      .def("validate", &CaseDataSeries::validate);

  py::class_<Particle>(m, "Particle")
      .def_readonly("theta_unit", &Particle::theta_unit)
      .def_readonly("distance", &Particle::distance)
      .def_readonly("theta_natural", &Particle::theta_natural);

  py::class_<ParticlePopulation>(m, "ParticlePopulation")
      .def_readonly("particles", &ParticlePopulation::particles)
      .def_readonly("weights", &ParticlePopulation::weights)
      .def_readonly("stage_index", &ParticlePopulation::stage_index)
      .def_readonly("epsilon", &ParticlePopulation::epsilon);

  py::class_<StepSizeState>(m, "StepSizeState")
      .def_readonly("kind", &StepSizeState::kind)
      .def_readonly("scalar_s", &StepSizeState::scalar_s)
      .def_readonly("beta_alpha", &StepSizeState::beta_alpha)
      .def_readonly("beta_beta", &StepSizeState::beta_beta)
      .def_readonly("adaptation_frozen", &StepSizeState::adaptation_frozen);

  py::class_<StageRecord>(m, "StageRecord")
      .def_readonly("stage_index", &StageRecord::stage_index)
      .def_readonly("epsilon", &StageRecord::epsilon)
      .def_readonly("simulation_runs_used", &StageRecord::simulation_runs_used)
      .def_readonly("acceptance_ratio", &StageRecord::acceptance_ratio)
      .def_readonly("step_state", &StageRecord::step_state);

  py::class_<SmcConfig>(m, "SmcConfig")
      .def(py::init<>())
      .def_readwrite("kind", &SmcConfig::kind)
      .def_readwrite("target_count", &SmcConfig::target_count)
      .def_readwrite("batch_size", &SmcConfig::batch_size)
      .def_readwrite("survival_ratio", &SmcConfig::survival_ratio)
      .def_readwrite("run_budget", &SmcConfig::run_budget)
      .def_readwrite("seed", &SmcConfig::seed)
      .def_readwrite("initial_step", &SmcConfig::initial_step)
      .def_readwrite("target_tolerance", &SmcConfig::target_tolerance)
      .def_readwrite("num_workers", &SmcConfig::num_workers);

  py::class_<SmcResult>(m, "SmcResult")
      .def_readonly("population", &SmcResult::population)
      .def_readonly("stages", &SmcResult::stages)
      .def_readonly("complete", &SmcResult::complete);

  m.def("generate_synthetic", &generate_synthetic, py::arg("theta_true"),
        py::arg("config"), py::arg("seed"));

  m.def(
      "simulate",
      [](const ParameterVector& theta, const SimConfig& config,
         std::uint64_t seed, std::uint64_t stream_id) {
        RngStream stream(seed, stream_id);
        const auto traj = simulate(stream, theta, config);
        std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> out;
        for (const auto& day : traj.observed) {
          out.emplace_back(day.A, day.R, day.D);
        }
        return py::make_tuple(traj.valid, out);
      },
      py::arg("theta"), py::arg("config"), py::arg("seed"),
      py::arg("stream_id") = 0,
      "One trajectory; returns (valid, [(A, R, D) per day]).");

  m.def(
      "distance",
      [](const std::vector<std::tuple<std::int64_t, std::int64_t,
                                      std::int64_t>>& simulated,
         const CaseDataSeries& observed) {
        EpiTrajectory traj;
        for (const auto& [a, r, d] : simulated) {
          traj.observed.push_back({a, r, d});
        }
        return distance(traj, observed);
      },
      py::arg("simulated"), py::arg("observed"));

  m.def("sample_bdss_steps", &sample_bdss_steps, py::arg("seed"),
        py::arg("slot_base"), py::arg("stage_index"), py::arg("epsilon_i"),
        py::arg("epsilon_1"), py::arg("count"));

  m.def(
      "run_abc_smc",
      [](const SmcConfig& config, const CaseDataSeries& observed) {
        return run_abc_smc(config, observed);
      },
      py::arg("config"), py::arg("observed"),
      py::call_guard<py::gil_scoped_release>());
}
