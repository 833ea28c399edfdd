#include "hyperbend/hyperbend.h"

#include "bending.hpp"
#include "constructor.hpp"
#include "errors.hpp"
#include "report.hpp"
#include "scenario.hpp"
#include "version.hpp"

#include <cstring>
#include <exception>
#include <new>
#include <string>

struct hb_chart {
  hyperbend::ChartPtr chart;
};

struct hb_bending {
  hyperbend::BendingPtr field;
};

namespace {

thread_local std::string g_last_error;

hb_status set_error(hb_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename F>
hb_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const hyperbend::Error& e) {
    return set_error(static_cast<hb_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(HB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(HB_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(HB_ERR_INTERNAL, "unknown failure");
  }
}

hyperbend::Vec point(const hb_chart* c, const double* p) {
  return Eigen::Map<const Eigen::VectorXd>(p, c->chart->dim());
}

void copy_rowmajor(const hyperbend::Mat& m, double* out) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out[r * m.cols() + c] = m(r, c);
  }
}

}  // namespace

extern "C" {

const char* hb_version(void) { return hyperbend::kVersion; }

const char* hb_status_name(hb_status status) {
  switch (status) {
    case HB_OK: return "OK";
    case HB_ERR_NULL_ARGUMENT: return "NullArgument";
    case HB_ERR_BUFFER_TOO_SMALL: return "BufferTooSmall";
    case HB_ERR_INTERNAL: return "Internal";
    default: break;
  }
  if (status >= HB_ERR_OUT_OF_DOMAIN && status <= HB_ERR_INVALID_ARGUMENT) {
    return hyperbend::error_code_name(static_cast<hyperbend::ErrorCode>(status));
  }
  return "Unknown";
}

const char* hb_last_error(void) { return g_last_error.c_str(); }

int hb_scenario_count(void) { return static_cast<int>(hyperbend::list_scenarios().size()); }

hb_status hb_scenario_name(int index, const char** name) {
  return guarded([&] {
    if (!name) return set_error(HB_ERR_NULL_ARGUMENT, "name is null");
    const auto& names = hyperbend::list_scenarios();
    if (index < 0 || index >= static_cast<int>(names.size())) {
      return set_error(HB_ERR_INVALID_ARGUMENT, "scenario index out of range");
    }
    *name = names[index].c_str();
    return HB_OK;
  });
}

hb_status hb_scenario_describe(const char* name, char* buf, size_t capacity, size_t* needed) {
  return guarded([&] {
    if (!name) return set_error(HB_ERR_NULL_ARGUMENT, "name is null");
    const std::string& text = hyperbend::builtin_scenario_text(name);
    if (needed) *needed = text.size() + 1;
    if (!buf || capacity < text.size() + 1) return set_error(HB_ERR_BUFFER_TOO_SMALL, "buffer too small");
    std::memcpy(buf, text.c_str(), text.size() + 1);
    return HB_OK;
  });
}

hb_status hb_run_scenario(const char* path_or_name, const hb_run_options* options, int* exit_code) {
  return guarded([&] {
    if (!path_or_name || !exit_code) return set_error(HB_ERR_NULL_ARGUMENT, "argument is null");
    hyperbend::RunOptions opts;
    if (options) {
      if (options->out_dir) opts.out_dir = options->out_dir;
      opts.jobs = options->jobs < 1 ? 1 : options->jobs;
      opts.seed = options->seed;
    }
    const auto res = hyperbend::run_scenario(std::string(path_or_name), opts);
    *exit_code = res.exit_code;
    if (res.report.contains("error") && res.report["error"].is_object()) {
      const auto& err = res.report["error"];
      g_last_error = err.value("code", "") + ": " + err.value("message", "");
    }
    return HB_OK;
  });
}

hb_status hb_chart_from_scenario(const char* path_or_name, hb_chart** out) {
  return guarded([&] {
    if (!path_or_name || !out) return set_error(HB_ERR_NULL_ARGUMENT, "argument is null");
    const auto sc = hyperbend::load_scenario(path_or_name);
    *out = new hb_chart{hyperbend::build_chart(sc)};
    return HB_OK;
  });
}

void hb_chart_free(hb_chart* chart) { delete chart; }

int hb_chart_dim(const hb_chart* chart) { return chart ? chart->chart->dim() : -1; }

hb_status hb_chart_eval(const hb_chart* chart, const double* p, double* value) {
  return guarded([&] {
    if (!chart || !p || !value) return set_error(HB_ERR_NULL_ARGUMENT, "argument is null");
    const hyperbend::Vec v = chart->chart->value(point(chart, p));
    for (int i = 0; i < v.size(); ++i) value[i] = v(i);
    return HB_OK;
  });
}

hb_status hb_chart_geometry(const hb_chart* chart, const double* p, double* shape, double* principal, int* nullity) {
  return guarded([&] {
    if (!chart || !p) return set_error(HB_ERR_NULL_ARGUMENT, "argument is null");
    const auto st = hyperbend::evaluate_geometry(*chart->chart, point(chart, p));
    if (shape) copy_rowmajor(st.shape, shape);
    if (principal) {
      for (int i = 0; i < st.principal.size(); ++i) principal[i] = st.principal(i);
    }
    if (nullity) *nullity = st.nullity_index;
    return HB_OK;
  });
}

hb_status hb_bending_trivial(const hb_chart* chart, const double* D, const double* w, hb_bending** out) {
  return guarded([&] {
    if (!chart || !D || !w || !out) return set_error(HB_ERR_NULL_ARGUMENT, "argument is null");
    const int m = chart->chart->ambient_dim();
    hyperbend::Mat Dm(m, m);
    hyperbend::Vec wv(m);
    for (int r = 0; r < m; ++r) {
      wv(r) = w[r];
      for (int c = 0; c < m; ++c) Dm(r, c) = D[r * m + c];
    }
    *out = new hb_bending{std::make_shared<hyperbend::AffineBending>(chart->chart, Dm, wv)};
    return HB_OK;
  });
}

hb_status hb_bending_constructed(const hb_chart* chart, const char* theta0_json, hb_bending** out) {
  return guarded([&] {
    if (!chart || !theta0_json || !out) return set_error(HB_ERR_NULL_ARGUMENT, "argument is null");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(theta0_json);
    } catch (const nlohmann::json::parse_error& e) {
      return set_error(HB_ERR_PARSE, e.what());
    }
    const auto seed = hyperbend::make_seed(chart->chart, hyperbend::Function1D::from_json(j));
    *out = new hb_bending{hyperbend::reconstruct_tau(seed, hyperbend::BTensorField(hyperbend::solve_theta(seed)))};
    return HB_OK;
  });
}

void hb_bending_free(hb_bending* bending) { delete bending; }

hb_status hb_bending_eval(const hb_bending* bending, const double* p, double* tau) {
  return guarded([&] {
    if (!bending || !p || !tau) return set_error(HB_ERR_NULL_ARGUMENT, "argument is null");
    const int n = bending->field->chart().dim();
    const hyperbend::Vec t = bending->field->jet(Eigen::Map<const Eigen::VectorXd>(p, n), 0).value;
    for (int i = 0; i < t.size(); ++i) tau[i] = t(i);
    return HB_OK;
  });
}

hb_status hb_bending_residual(const hb_bending* bending, const double* points, size_t count, double* residual) {
  return guarded([&] {
    if (!bending || !points || !residual) return set_error(HB_ERR_NULL_ARGUMENT, "argument is null");
    const int n = bending->field->chart().dim();
    std::vector<hyperbend::Vec> grid;
    for (size_t k = 0; k < count; ++k) grid.emplace_back(Eigen::Map<const Eigen::VectorXd>(points + k * n, n));
    *residual = hyperbend::bending_residual(*bending->field, grid);
    return HB_OK;
  });
}

hb_status hb_bending_B(const hb_bending* bending, const double* p, double* B) {
  return guarded([&] {
    if (!bending || !p || !B) return set_error(HB_ERR_NULL_ARGUMENT, "argument is null");
    const int n = bending->field->chart().dim();
    const auto at = hyperbend::compute_associated(*bending->field, Eigen::Map<const Eigen::VectorXd>(p, n));
    copy_rowmajor(at.B, B);
    return HB_OK;
  });
}

}  // extern "C"
