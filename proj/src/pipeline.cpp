#include "pipeline.hpp"

#include "constructor.hpp"
#include "errors.hpp"
#include "kernelprobe.hpp"
#include "transport.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>

namespace hyperbend {

using nlohmann::json;

void CheckSet::add(const std::string& name, double value, const char* op, double tol, bool ok) {
  metrics_[name] = value;
  checks_.push_back({{"metric", name}, {"op", op}, {"tolerance", tol}, {"value", value}, {"pass", ok}});
  passed_ = passed_ && ok;
}

double CheckSet::tolerance(const std::string& name, double fallback) const {
  if (tol_.contains(name)) return tol_[name].get<double>();
  const auto slash = name.rfind('/');
  if (slash != std::string::npos && tol_.contains(name.substr(slash + 1))) return tol_[name.substr(slash + 1)].get<double>();
  return fallback;
}

void CheckSet::below(const std::string& name, double value, double default_tol) {
  const double tol = tolerance(name, default_tol);
  add(name, value, "<", tol, std::isfinite(value) && value < tol);
}

void CheckSet::above(const std::string& name, double value, double default_tol) {
  const double tol = tolerance(name, default_tol);
  add(name, value, ">", tol, std::isfinite(value) && value > tol);
}

void CheckSet::equal(const std::string& name, long long value, long long expected) {
  metrics_[name] = value;
  checks_.push_back({{"metric", name}, {"op", "=="}, {"expected", expected}, {"value", value}, {"pass", value == expected}});
  passed_ = passed_ && value == expected;
}

void CheckSet::require(const std::string& name, bool ok) {
  checks_.push_back({{"metric", name}, {"op", "holds"}, {"pass", ok}});
  passed_ = passed_ && ok;
}

void CheckSet::merge(const CheckSet& other) {
  for (auto it = other.metrics_.begin(); it != other.metrics_.end(); ++it) metrics_[it.key()] = it.value();
  for (const auto& c : other.checks_) checks_.push_back(c);
  passed_ = passed_ && other.passed_;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(jobs, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  int err_index = count;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (i < err_index) {
            err_index = i;
            err = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

std::vector<Vec> grid_from_json(const json& grid, const ChartImmersion& chart) {
  const int n = chart.dim();
  const Box box = grid.contains("box") ? box_from_json(grid["box"], n, "grid.box") : chart.domain();
  return tensor_grid(box, grid["counts"].get<std::vector<int>>(), grid.value("inset", 0.05));
}

namespace {

// Portable uniform draw in [-1, 1).
double uniform_pm1(std::mt19937_64& rng) { return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0; }

std::string tag(const std::string& label, const std::string& metric) { return label + "/" + metric; }

std::string csv_path(const PipelineContext& ctx, const std::string& stem) {
  return (std::filesystem::path(ctx.options.out_dir) / (stem + ctx.file_tag + ".csv")).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::PipelineError, "cli", "cannot write " + path);
  out << text;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::shared_ptr<ConstructedBending> construct(ChartPtr chart, const Function1D& theta0) {
  const BendingSeed seed = make_seed(chart, theta0);
  return reconstruct_tau(seed, BTensorField(solve_theta(seed)));
}

// ---------------------------------------------------------------- verify

struct NamedBending {
  std::string label;
  BendingPtr field;
  bool exact = true;
};

std::vector<NamedBending> build_bendings(const PipelineContext& ctx, const json& list) {
  const int m = ctx.chart->ambient_dim();
  std::vector<NamedBending> out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& b = list[i];
    const std::string type = b["type"].get<std::string>();
    const std::string label = b.value("label", "b" + std::to_string(i) + "-" + type);
    if (type == "trivial") {
      Mat D = Mat::Zero(m, m);
      Vec w = Vec::Zero(m);
      if (b.value("random", false)) {
        std::mt19937_64 rng(ctx.options.seed * 1000003ULL + static_cast<std::uint64_t>(ctx.index) * 1009ULL + i);
        for (int r = 0; r < m; ++r) {
          for (int c = r + 1; c < m; ++c) {
            D(r, c) = uniform_pm1(rng);
            D(c, r) = -D(r, c);
          }
        }
        for (int r = 0; r < m; ++r) w(r) = uniform_pm1(rng);
      }
      if (b.contains("D")) {
        for (int r = 0; r < m; ++r) {
          for (int c = 0; c < m; ++c) D(r, c) = b["D"][r][c].get<double>();
        }
      }
      if (b.contains("w")) w = to_vec(b["w"].get<std::vector<double>>());
      out.push_back({label, std::make_shared<AffineBending>(ctx.chart, D, w), true});
    } else if (type == "expression") {
      std::vector<Expr> comps;
      for (const auto& e : b["components"]) comps.push_back(Expr::from_json(e));
      out.push_back({label, std::make_shared<ExpressionBending>(ctx.chart, comps), true});
    } else {
      out.push_back({label, construct(ctx.chart, Function1D::from_json(b["theta0"])), false});
    }
  }
  return out;
}

CheckSet verify_bending(const NamedBending& nb, const std::vector<Vec>& grid, const json& tol) {
  CheckSet cs(tol);
  const BendingField& bf = *nb.field;
  const std::string& L = nb.label;
  cs.below(tag(L, "bending_residual"), bending_residual(bf, grid), nb.exact ? 1e-9 : 1e-7);
  double dev = 0.0, sym = 0.0;
  for (double t : {0.1, 1.0}) {
    dev = std::max(dev, metric_deviation(bf, t, grid));
    sym = std::max(sym, metric_symmetry(bf, t, grid));
  }
  cs.below(tag(L, "metric_deviation"), dev, 1e-12);
  cs.below(tag(L, "metric_symmetry"), sym, 1e-12);

  double xi_n = 0, xi_t = 0, l_jet = 0, l_st = 0, xi_d = 0, b1 = 0, b2 = 0, null_res = 0, rigid = 0, evo = 0;
  double dual_rel = 0, dual_abs = 0, b_max = 0;
  int rank2_points = 0, rigid_points = 0, rel_points = 0, abs_points = 0;
  for (const Vec& p : grid) {
    const AssociatedTensors at = compute_associated(bf, p);
    xi_n = std::max(xi_n, xi_normal_residual(at));
    xi_t = std::max(xi_t, xi_tangent_residual(at));
    l_jet = std::max(l_jet, verify_L_derivative(bf, p, DerivativeRoute::Jet));
    l_st = std::max(l_st, verify_L_derivative(bf, p, DerivativeRoute::Stencil));
    xi_d = std::max(xi_d, verify_xi_derivative(bf, p));
    b1 = std::max(b1, verify_B1(at));
    b2 = std::max(b2, verify_B2(bf, p));
    evo = std::max(evo, verify_normal_evolution(bf, p, 0.1));
    const double bn = at.B.norm();
    b_max = std::max(b_max, bn);
    const double diff = (compute_B_fd(bf, p, 1e-4, true) - at.B).norm();
    if (bn > 1e-6) {
      dual_rel = std::max(dual_rel, diff / bn);
      ++rel_points;
    } else {
      dual_abs = std::max(dual_abs, diff);
      ++abs_points;
    }
    if (at.state.rank() == 2) {
      null_res = std::max(null_res, nullity_kernel_residual(at));
      ++rank2_points;
    }
    if (at.state.rank() >= 3) {
      rigid = std::max(rigid, bn);
      ++rigid_points;
    }
  }
  cs.below(tag(L, "xi_normal"), xi_n, 1e-9);
  cs.below(tag(L, "xi_tangent"), xi_t, 1e-9);
  cs.below(tag(L, "L_derivative_jet"), l_jet, nb.exact ? 1e-9 : 1e-6);
  cs.below(tag(L, "L_derivative_stencil"), l_st, 1e-6);
  cs.below(tag(L, "xi_derivative"), xi_d, 1e-6);
  cs.below(tag(L, "B1"), b1, nb.exact ? 1e-9 : 1e-6);
  cs.below(tag(L, "B2"), b2, 1e-6);
  cs.below(tag(L, "normal_evolution"), evo, 1e-7);
  cs.record(tag(L, "B_norm_max"), b_max);
  if (rel_points) cs.below(tag(L, "dual_oracle_B_rel"), dual_rel, 1e-4);
  if (abs_points) cs.below(tag(L, "dual_oracle_B_abs"), dual_abs, 1e-6);
  if (rank2_points) cs.below(tag(L, "nullity_kernel"), null_res, 1e-7);
  if (rigid_points) cs.below(tag(L, "rigidity_B_norm"), rigid, 1e-8);
  cs.record(tag(L, "rank_ge3_points"), rigid_points);
  return cs;
}

json run_verify(const PipelineContext& ctx, const json& cfg) {
  const auto grid = grid_from_json(cfg["grid"], *ctx.chart);
  const auto bendings = build_bendings(ctx, cfg["bendings"]);
  const json tol = cfg.value("tolerances", json::object());
  std::vector<CheckSet> parts(bendings.size(), CheckSet(tol));
  parallel_for(static_cast<int>(bendings.size()), ctx.options.jobs,
               [&](int i) { parts[i] = verify_bending(bendings[i], grid, tol); });
  CheckSet all(tol);
  for (const auto& p : parts) all.merge(p);
  json out = {{"metrics", all.metrics()}, {"checks", all.checks()}, {"passed", all.passed()}};
  out["grid_points"] = grid.size();
  return out;
}

// ---------------------------------------------------------------- construct

struct ConstructOutcome {
  CheckSet checks;
  std::shared_ptr<ConstructedBending> bending;
};

ConstructOutcome construct_one(const PipelineContext& ctx, const json& fn, const std::string& L,
                               const std::vector<Vec>& grid, const std::vector<Vec>& fit_grid, const json& tol) {
  ConstructOutcome out{CheckSet(tol), nullptr};
  CheckSet& cs = out.checks;
  const Function1D theta0 = Function1D::from_json(fn);
  const BendingSeed seed = make_seed(ctx.chart, theta0);
  const ThetaField theta = solve_theta(seed);
  double ode = 0.0;
  for (const Vec& p : grid) ode = std::max(ode, theta_ode_residual(theta, p));
  cs.below(tag(L, "theta_ode"), ode, 1e-8);

  const BTensorField field = assemble_B(seed, theta, grid);
  const CompatibilityReport comp = b_field_residuals(field, grid);
  cs.below(tag(L, "B1"), comp.b1, 1e-7);
  cs.below(tag(L, "B2"), comp.b2, 1e-7);
  cs.below(tag(L, "shape"), comp.shape, 1e-8);

  auto cb = reconstruct_tau(seed, field);
  out.bending = cb;
  cs.below(tag(L, "bending_residual"), bending_residual(*cb, grid), 1e-7);
  cs.below(tag(L, "metric_deviation"), metric_deviation(*cb, 1.0, grid), 1e-12);
  cs.below(tag(L, "metric_symmetry"), metric_symmetry(*cb, 1.0, grid), 1e-12);

  GeometryOptions o2;
  o2.order = 2;
  double round = 0, phi1 = 0, phi2 = 0, b_max = 0;
  for (const Vec& p : grid) {
    const AssociatedTensors at = compute_associated(*cb, p, o2);
    const Mat Bin = field.B(p);
    const double bn = Bin.norm();
    b_max = std::max(b_max, bn);
    round = std::max(round, bn > 0 ? (at.B - Bin).norm() / bn : at.B.norm());
    if (bn > 0) {
      const RuledFrame fr = ruled_frame(at.state);
      const Decomposition d = decompose_relative_tensor(at.state, Bin);
      const double expect = theta.value(p) / fr.nu;
      phi1 = std::max(phi1, std::abs(d.phi1));
      phi2 = std::max(phi2, std::abs(d.phi2 - expect) / std::max(1.0, std::abs(expect)));
    }
  }
  cs.below(tag(L, "B_roundtrip"), round, 1e-6);
  cs.below(tag(L, "phi1"), phi1, 1e-7);
  cs.below(tag(L, "phi2_vs_theta_over_nu"), phi2, 1e-7);
  cs.record(tag(L, "B_norm_max"), b_max);

  const Box& dom = ctx.chart->domain();
  double loop = 0.0;
  const std::size_t loops = std::min<std::size_t>(grid.size(), 4);
  for (std::size_t k = 0; k < loops; ++k) {
    const Vec& p = grid[k * (grid.size() / loops)];
    auto step = [&](int a) {
      const double h = std::min(0.1 * (dom.hi(a) - dom.lo(a)), 0.25);
      return p(a) > dom.center()(a) ? -h : h;
    };
    for (int a = 0; a + 1 < ctx.chart->dim(); ++a) loop = std::max(loop, cb->loop_residual(p, a, a + 1, step(a), step(a + 1)));
  }
  cs.below(tag(L, "loop"), loop, 1e-6);

  if (!theta0.is_zero()) cs.above(tag(L, "fit_trivial"), fit_trivial(*cb, fit_grid).residual, 1e-2);

  if (b_max > 0) {
    const auto fam = gauss_codazzi_family_check(
        *ctx.chart, [&](const Vec& x) { return field.B(x); }, default_t_list(b_max), grid);
    double gauss = 0, codazzi = 0;
    for (const auto& f : fam) {
      gauss = std::max(gauss, f.gauss);
      codazzi = std::max(codazzi, f.codazzi);
    }
    cs.below(tag(L, "family_gauss"), gauss, 1e-6);
    cs.below(tag(L, "family_codazzi"), codazzi, 1e-6);
  }

  if (auto ruled = std::dynamic_pointer_cast<const RuledChart>(ctx.chart)) {
    const FrameRotationBending oracle(ruled, theta0, seed.basepoint(0));
    double diff = 0.0;
    for (const Vec& p : grid) {
      const Vec t_ref = oracle.jet(p, 0).value;
      diff = std::max(diff, (cb->jet(p, 0).value - t_ref).norm() / std::max(1.0, t_ref.norm()));
    }
    cs.below(tag(L, "tau_vs_frame_rotation"), diff, 1e-9);
  }
  return out;
}

json run_construct(const PipelineContext& ctx, const json& cfg) {
  const auto grid = grid_from_json(cfg["grid"], *ctx.chart);
  // fit_trivial wants at least twice the trivial dimension in samples
  json fit_cfg = cfg["grid"];
  std::vector<int> counts = fit_cfg["counts"].get<std::vector<int>>();
  for (int& c : counts) c = std::max(c, 2);
  const int n = ctx.chart->dim();
  auto total = [&] {
    int t = 1;
    for (int c : counts) t *= c;
    return t;
  };
  while (total() < (n + 1) * (n + 2)) ++*std::min_element(counts.begin(), counts.end());
  fit_cfg["counts"] = counts;
  const auto fit_grid = grid_from_json(fit_cfg, *ctx.chart);
  const json tol = cfg.value("tolerances", json::object());
  const json& fns = cfg["theta0"];
  const int count = static_cast<int>(fns.size());
  std::vector<ConstructOutcome> parts(count, ConstructOutcome{CheckSet(tol), nullptr});
  parallel_for(count, ctx.options.jobs, [&](int i) {
    parts[i] = construct_one(ctx, fns[i], "theta" + std::to_string(i), grid, fit_grid, tol);
  });
  CheckSet all(tol);
  for (const auto& p : parts) all.merge(p.checks);

  if (count >= 2) {
    const double a = 0.7, b = -1.3;
    const Function1D combo = Function1D::sum(Function1D::scaled(a, Function1D::from_json(fns[0])),
                                             Function1D::scaled(b, Function1D::from_json(fns[1])));
    const auto cc = construct(ctx.chart, combo);
    double lin = 0.0;
    for (const Vec& p : grid) {
      const Vec d = cc->jet(p, 0).value - a * parts[0].bending->jet(p, 0).value - b * parts[1].bending->jet(p, 0).value;
      lin = std::max(lin, d.cwiseAbs().maxCoeff());
    }
    all.below("linearity", lin, 1e-9);
  }

  std::string csv = "theta_index";
  for (int i = 0; i < ctx.chart->dim(); ++i) csv += ",x" + std::to_string(i);
  for (int i = 0; i < ctx.chart->ambient_dim(); ++i) csv += ",tau" + std::to_string(i);
  csv += "\n";
  for (int k = 0; k < count; ++k) {
    for (const Vec& p : grid) {
      csv += std::to_string(k);
      for (int i = 0; i < p.size(); ++i) csv += "," + fmt(p(i));
      const Vec t = parts[k].bending->jet(p, 0).value;
      for (int i = 0; i < t.size(); ++i) csv += "," + fmt(t(i));
      csv += "\n";
    }
  }
  const std::string path = csv_path(ctx, "bending_samples");
  write_file(path, csv);

  json out = {{"metrics", all.metrics()}, {"checks", all.checks()}, {"passed", all.passed()}};
  out["files"] = json::array({std::filesystem::path(path).filename().string()});
  out["grid_points"] = grid.size();
  return out;
}

// ---------------------------------------------------------------- transport

struct TransportOutcome {
  CheckSet checks;
  std::string csv;
};

TransportOutcome transport_one(const PipelineContext& ctx, const json& g, const std::string& L,
                               const std::vector<BendingPtr>& bendings, bool complete, const json& tol) {
  TransportOutcome out{CheckSet(tol), {}};
  CheckSet& cs = out.checks;
  const int n = ctx.chart->dim();
  const Vec start = to_vec(g["start"].get<std::vector<double>>());
  const GeometryState st = evaluate_geometry(*ctx.chart, start);
  if (st.nullity_index == 0) {
    fail(ErrorCode::NullityJump, "transport", "no relative nullity at the geodesic start", to_std(start));
  }
  const int dir_index = std::min(g.value("nullity_index", 0), st.nullity_index - 1);
  const Vec T = st.nullity_basis.col(dir_index);
  GeodesicOptions gopt;
  gopt.step = g.value("step", 1e-3);
  const NullityGeodesic geo(ctx.chart, start, T, g["s_max"].get<double>(), gopt);

  cs.below(tag(L, "geodesic_acceleration"), geo.acceleration_residual(), 1e-8);
  cs.below(tag(L, "straightness"), geo.straightness(), 1e-8);
  const SplittingAlongGeodesic sp = integrate_splitting(geo);
  cs.below(tag(L, "splitting_rk_vs_geometric"), sp.max_rk_vs_geo, 1e-6);
  cs.below(tag(L, "splitting_rk_vs_closed"), sp.max_rk_vs_closed, 1e-8);
  if (complete) {
    cs.below(tag(L, "max_real_eigenvalue"), sp.max_real_eigenvalue, 1e-6);
  } else {
    cs.record(tag(L, "max_real_eigenvalue"), sp.max_real_eigenvalue);
  }
  const TransportResult ta = transport_A(geo);
  cs.below(tag(L, "transport_A"), ta.residual, 1e-6);
  const DetEvolution da = det_evolution(geo, nullptr);
  cs.below(tag(L, "det_A"), da.residual, 1e-6);
  cs.below(tag(L, "kernel_parallel"), kernel_parallel_check(geo), 1e-6);

  auto rows = [&](const std::string& quantity, const std::vector<double>& s, const std::vector<double>& v,
                  const std::vector<double>* ref) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      out.csv += L + "," + quantity + "," + fmt(s[k]) + "," + fmt(v[k]) + "," + (ref ? fmt((*ref)[k]) : "") + "\n";
    }
  };
  rows("transport_A", ta.s, ta.pointwise, nullptr);
  rows("det_A", da.s, da.det, &da.predicted);
  std::vector<double> s_nodes, eig;
  for (std::size_t k = 0; k < sp.s.size(); k += 50) {
    s_nodes.push_back(sp.s[k]);
    eig.push_back(max_real_eigenvalue(sp.C_rk[k]));
  }
  rows("max_real_eigenvalue", s_nodes, eig, nullptr);

  const int stride = 50;
  for (std::size_t b = 0; b < bendings.size(); ++b) {
    const std::string B = "B" + std::to_string(b);
    const TransportResult tb = transport_B(geo, *bendings[b], 1.0, stride);
    cs.below(tag(L, "transport_" + B), tb.residual, 1e-6);
    const DetEvolution db = det_evolution(geo, bendings[b].get(), stride);
    cs.below(tag(L, "det_" + B), db.residual, 1e-6);
    rows("transport_" + B, tb.s, tb.pointwise, nullptr);
    rows("det_" + B, db.s, db.det, &db.predicted);
  }
  (void)n;
  return out;
}

json run_transport(const PipelineContext& ctx, const json& cfg) {
  const json tol = cfg.value("tolerances", json::object());
  std::vector<BendingPtr> bendings;
  if (cfg.contains("bendings")) {
    for (const auto& fn : cfg["bendings"]) bendings.push_back(construct(ctx.chart, Function1D::from_json(fn)));
  }
  const bool complete = ctx.scenario.claims.value("complete_leaves", false);
  const json& geos = cfg["geodesics"];
  const int count = static_cast<int>(geos.size());
  std::vector<TransportOutcome> parts(count, TransportOutcome{CheckSet(tol), {}});
  parallel_for(count, ctx.options.jobs, [&](int i) {
    parts[i] = transport_one(ctx, geos[i], "g" + std::to_string(i), bendings, complete, tol);
  });
  CheckSet all(tol);
  std::string csv = "geodesic,quantity,s,value,reference\n";
  for (const auto& p : parts) {
    all.merge(p.checks);
    csv += p.csv;
  }
  const std::string path = csv_path(ctx, "transport");
  write_file(path, csv);
  json out = {{"metrics", all.metrics()}, {"checks", all.checks()}, {"passed", all.passed()}};
  out["files"] = json::array({std::filesystem::path(path).filename().string()});
  return out;
}

// ---------------------------------------------------------------- kernel

json run_kernel(const PipelineContext& ctx, const json& cfg) {
  const json tol = cfg.value("tolerances", json::object());
  const int n = ctx.chart->dim();
  const int trivial_dim = (n + 1) * (n + 2) / 2;
  const bool s_axis = cfg.value("mode", "uniform") == "s_axis";
  const std::string expected = cfg.value("expected", "none");
  DiscretizationSpec base;
  if (cfg.contains("box")) base.box = box_from_json(cfg["box"], n, "box");
  base.gap_threshold = cfg.value("gap_threshold", 1e3);
  base.seed = ctx.options.seed;
  const Box box = base.box ? *base.box : ctx.chart->domain();
  const auto vgrid = tensor_grid(box, cfg.value("verify_counts", std::vector<int>(n, 3)));

  CheckSet cs(tol);
  json rows = json::array();
  std::string csv = "degree,index,sigma,sigma_relative\n";
  int last_dim = -1;
  bool monotone = true;
  for (const auto& dj : cfg["degrees"]) {
    const int d = dj.get<int>();
    DiscretizationSpec spec = base;
    if (s_axis) {
      spec.degrees = cfg["base_degrees"].get<std::vector<int>>();
      spec.degrees[0] = d;
    } else {
      spec.degrees.assign(n, d);
      spec.total_degree = d;
    }
    const AssembledOperator op = assemble_operator(ctx.chart, spec);
    KernelReport rep = kernel_svd(op, spec);
    if (!rep.ambiguous) classify_kernel_elements(op, rep, vgrid);

    const std::string L = "d" + std::to_string(d);
    json row = {{"degree", d},
                {"rows", rep.rows},
                {"columns", rep.columns},
                {"sketched", rep.sketched},
                {"ambiguous", rep.ambiguous},
                {"gap_ratio", rep.gap_ratio},
                {"trivial_dim", rep.trivial_dim},
                {"singular_values", rep.singular_values}};
    row["kernel_dim"] = rep.ambiguous ? json(nullptr) : json(rep.kernel_dim);
    const double s0 = rep.singular_values.empty() ? 1.0 : rep.singular_values.front();
    for (std::size_t k = 0; k < rep.singular_values.size(); ++k) {
      csv += std::to_string(d) + "," + std::to_string(k) + "," + fmt(rep.singular_values[k]) + "," +
             fmt(rep.singular_values[k] / s0) + "\n";
    }

    long long want = -1;
    if (expected == "trivial") want = trivial_dim;
    if (expected == "ruled") want = trivial_dim + d + 1;
    row["expected_kernel_dim"] = want >= 0 ? json(want) : json(nullptr);
    cs.require(tag(L, "gap_found"), !rep.ambiguous);
    if (rep.ambiguous) {
      rows.push_back(row);
      continue;
    }
    if (want >= 0) cs.equal(tag(L, "kernel_dim"), rep.kernel_dim, want);
    else cs.record(tag(L, "kernel_dim"), rep.kernel_dim);
    cs.record(tag(L, "gap_ratio"), rep.gap_ratio);
    cs.require(tag(L, "kernel_contains_trivial"), rep.kernel_dim >= rep.trivial_dim);
    cs.equal(tag(L, "nontrivial_count"), rep.nontrivial_count, rep.kernel_dim - rep.trivial_dim);
    double shape = 0.0, null_res = 0.0;
    json elements = json::array();
    for (const auto& e : rep.elements) {
      elements.push_back({{"trivial", e.trivial},
                          {"trivial_cosine", e.trivial_cosine},
                          {"fit_residual", e.fit_residual},
                          {"B_norm", e.B_norm},
                          {"shape_residual", e.shape_residual},
                          {"nullity_residual", e.nullity_residual}});
      if (e.trivial) continue;
      shape = std::max(shape, e.shape_residual);
      null_res = std::max(null_res, e.nullity_residual);
    }
    row["elements"] = elements;
    row["nontrivial_count"] = rep.nontrivial_count;
    if (rep.nontrivial_count > 0 && ctx.chart->ruling_directions(box.center())) {
      cs.below(tag(L, "shape_residual"), shape, 1e-3);
      cs.below(tag(L, "nullity_residual"), null_res, 1e-5);
    }
    if (last_dim >= 0 && rep.kernel_dim < last_dim) monotone = false;
    last_dim = rep.kernel_dim;
    rows.push_back(row);
  }
  cs.require("monotone_in_degree", monotone);
  const std::string path = csv_path(ctx, "spectrum");
  write_file(path, csv);
  json out = {{"metrics", cs.metrics()}, {"checks", cs.checks()}, {"passed", cs.passed()}};
  out["sweep"] = rows;
  out["mode"] = s_axis ? "s_axis" : "uniform";
  out["files"] = json::array({std::filesystem::path(path).filename().string()});
  return out;
}

}  // namespace

json run_pipeline(const PipelineContext& ctx, const PipelineConfig& cfg) {
  json out;
  try {
    if (cfg.type == "verify") out = run_verify(ctx, cfg.config);
    else if (cfg.type == "construct") out = run_construct(ctx, cfg.config);
    else if (cfg.type == "transport") out = run_transport(ctx, cfg.config);
    else out = run_kernel(ctx, cfg.config);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::PipelineError) throw;
    fail(ErrorCode::PipelineError, e.module(),
         "pipeline " + std::to_string(ctx.index) + " (" + cfg.type + "): " + error_code_name(e.code()) + ": " + e.detail(),
         e.point());
  }
  out["type"] = cfg.type;
  out["index"] = ctx.index;
  out["status"] = out["passed"].get<bool>() ? "pass" : "fail";
  out.erase("passed");
  if (!out.contains("files")) out["files"] = json::array();
  return out;
}

}  // namespace hyperbend
