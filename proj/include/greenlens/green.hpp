#pragma once

// Phase timing and the runtime -> energy -> CO2e model.

#include <chrono>
#include <exception>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>

#include <nlohmann/json.hpp>

#include "greenlens/error.hpp"

namespace greenlens {

struct PhaseTiming {
  double fit_seconds = 0.0;
  double eval_seconds = 0.0;
  double total() const { return fit_seconds + eval_seconds; }
};

// Carries the elapsed time of a computation that threw.
class TimedError : public std::runtime_error {
 public:
  TimedError(const std::string& what, double seconds)
      : std::runtime_error(what), seconds_(seconds), nested_(std::current_exception()) {}
  double seconds() const { return seconds_; }
  const std::exception_ptr& nested() const { return nested_; }

 private:
  double seconds_;
  std::exception_ptr nested_;
};

template <class T>
struct Timed {
  T result;
  double seconds;
};

template <class F>
auto time_phase(F&& action) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(clock::now() - start).count(); };
  try {
    if constexpr (std::is_void_v<std::invoke_result_t<F>>) {
      std::forward<F>(action)();
      return Timed<std::monostate>{{}, elapsed()};
    } else {
      auto result = std::forward<F>(action)();
      return Timed<decltype(result)>{std::move(result), elapsed()};
    }
  } catch (const std::exception& e) {
    throw TimedError(e.what(), elapsed());
  }
}

struct EnergyParams {
  double kwh_per_run = 0.51;
  double n_configs = 10;
  double intensity_g_per_kwh = 481;
  double overhead_factor = 40;
  double device_power_watts = 200;

  void validate() const {
    if (!(kwh_per_run > 0 && n_configs > 0 && intensity_g_per_kwh > 0 && overhead_factor > 0 &&
          device_power_watts > 0))
      throw DataError("energy parameters must all be strictly positive");
  }
};

// Direct conversion of measured runtime at the configured device power.
inline double estimate_energy(double seconds, const EnergyParams& params) {
  params.validate();
  if (!(seconds >= 0)) throw DataError("runtime must be non-negative");
  return seconds * params.device_power_watts / 3'600'000.0;
}

inline void validate_ratio(double runtime_ratio) {
  if (!(runtime_ratio > 0 && runtime_ratio <= 1)) throw DataError("runtime ratio must lie in (0, 1]");
}

// Grams CO2e saved per algorithm per dataset when runtime shrinks to
// `runtime_ratio` of the full-data runtime.
inline double estimate_co2_savings(double runtime_ratio, const EnergyParams& params) {
  params.validate();
  validate_ratio(runtime_ratio);
  return (1.0 - runtime_ratio) * params.kwh_per_run * params.n_configs * params.intensity_g_per_kwh *
         params.overhead_factor;
}

// estimated_kwh / estimated_gco2e describe the reduced workload
// (runtime_ratio of the full per-algorithm budget); savings_gco2e is what
// the reduction avoids.
struct EnergyReport {
  double runtime_ratio = 1.0;
  double estimated_kwh = 0.0;
  double estimated_gco2e = 0.0;
  double savings_gco2e = 0.0;
  EnergyParams params;
};

inline EnergyReport energy_report(double runtime_ratio, const EnergyParams& params) {
  EnergyReport r;
  r.runtime_ratio = runtime_ratio;
  r.params = params;
  r.savings_gco2e = estimate_co2_savings(runtime_ratio, params);
  r.estimated_kwh = runtime_ratio * params.kwh_per_run * params.n_configs * params.overhead_factor;
  r.estimated_gco2e = r.estimated_kwh * params.intensity_g_per_kwh;
  return r;
}

inline nlohmann::json to_json(const EnergyParams& p) {
  return {{"kwh_per_run", p.kwh_per_run},
          {"n_configs", p.n_configs},
          {"intensity_g_per_kwh", p.intensity_g_per_kwh},
          {"overhead_factor", p.overhead_factor},
          {"device_power_watts", p.device_power_watts}};
}

inline nlohmann::json to_json(const EnergyReport& r) {
  return {{"runtime_ratio", r.runtime_ratio},
          {"estimated_kwh", r.estimated_kwh},
          {"estimated_gco2e", r.estimated_gco2e},
          {"savings_gco2e", r.savings_gco2e},
          {"savings_kgco2e", r.savings_gco2e / 1000.0},
          {"params", to_json(r.params)}};
}

}  // namespace greenlens
