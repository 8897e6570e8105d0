#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "srmcf/barriers.hpp"
#include "srmcf/common.hpp"
#include "srmcf/config.hpp"
#include "srmcf/flow.hpp"
#include "srmcf/group.hpp"
#include "srmcf/inpaint.hpp"
#include "srmcf/io.hpp"
#include "srmcf/phi.hpp"
#include "srmcf/sweep.hpp"

namespace srmcf {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitNumerical = 3 };

[[nodiscard]] inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::CFLViolation:
    case ErrorCode::NonFiniteField:
    case ErrorCode::DegenerateFit:
    case ErrorCode::DegeneratePair:
    case ErrorCode::EmptySampleSet:
      return kExitNumerical;
    default:
      return kExitConfig;
  }
}

namespace cli {

namespace fs = std::filesystem;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + dir);
  return p;
}

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + p.string());
  return os;
}

inline std::string opt_num(const std::optional<double>& v) { return v ? num17(*v) : std::string(); }
inline std::string fin_num(double v) { return std::isfinite(v) ? num17(v) : std::string(); }

inline std::string snapshot_name(std::size_t k) {
  char b[32];
  std::snprintf(b, sizeof b, "snapshot_%03zu.srmcf", k);
  return b;
}

inline void write_trajectory(const fs::path& dir, const Trajectory& t) {
  for (std::size_t k = 0; k < t.snapshots.size(); ++k) write_snapshot(dir / snapshot_name(k), t.snapshots[k]);
  auto os = open_out(dir / "run_log.csv");
  CsvWriter w(os, {"step", "dt", "max_abs_rhs"});
  for (std::size_t k = 0; k < t.log.size(); ++k)
    w.row({std::to_string(k + 1), num17(t.log[k].dt), num17(t.log[k].max_abs_rhs)});
}

inline int simulate(const Settings& s, const fs::path& out, Streams io) {
  const FlowProblem p = to_flow_problem(s);
  const Trajectory t = run(p);
  write_trajectory(out, t);
  io.out << "simulate: " << t.log.size() << " steps, dt = " << num17(t.dt) << ", " << t.snapshots.size()
         << " snapshots written to " << out.string() << "\n";
  return kExitOk;
}

inline int sweep(const Settings& s, const fs::path& out, Streams io) {
  const FlowProblem base = to_flow_problem(s);
  SweepOptions opt;
  opt.confinement_tol = s.sweep.confinement_tol;
  opt.boundary_constant = s.sweep.boundary_constant;
  const SweepReport rep = vanishing_viscosity_sweep(base, s.sweep.epsilons, s.sweep.sigma, opt);
  {
    auto os = open_out(out / "sweep.csv");
    CsvWriter w(os, {"epsilon", "delta", "sup_diff", "confinement_radius", "decay_b", "decay_B", "fit_r2"});
    for (const auto& L : rep.levels)
      w.row({num17(L.epsilon), num17(L.delta), fin_num(L.sup_diff), opt_num(L.confinement_radius),
             L.decay ? num17(L.decay->b) : "", L.decay ? num17(L.decay->B) : "", L.decay ? num17(L.decay->r2) : ""});
  }
  {
    auto os = open_out(out / "sweep_summary.csv");
    CsvWriter w(os, {"alpha_hat", "fit_residual", "degenerate"});
    w.row({opt_num(rep.alpha_hat), fin_num(rep.fit_residual), rep.degenerate ? "1" : "0"});
  }
  for (std::size_t k = 0; k < rep.trajectories.size(); ++k) {
    const fs::path d = prepare_out((out / ("level_" + std::to_string(k))).string());
    write_trajectory(d, rep.trajectories[k]);
  }
  io.out << "sweep: " << rep.levels.size() << " levels";
  if (rep.alpha_hat) io.out << ", alpha_hat = " << num17(*rep.alpha_hat);
  if (rep.degenerate) io.out << ", degenerate";
  io.out << "\n";
  for (const auto& L : rep.levels)
    io.out << "  eps=" << L.epsilon << " delta=" << L.delta << " sup_diff=" << fin_num(L.sup_diff) << "\n";
  return kExitOk;
}

inline bool verify_brackets(const Settings& s, const fs::path& out, Streams io) {
  std::optional<Group> g;
  try {
    g = Group::validate(to_group_spec(s.group));
  } catch (const Error& e) {
    io.err << "brackets: FAIL " << e.what() << "\n";
    return false;
  }
  const int n = g->n(), hm = g->is_se2() ? 2 : g->m();
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto os = open_out(out / "brackets.csv");
  CsvRow head = {"i", "j"};
  for (int a = 0; a < n; ++a) head.push_back("p" + std::to_string(a));
  for (int a = 0; a < n; ++a) head.push_back("bracket" + std::to_string(a));
  for (const char* c : {"fd_error_h", "fd_error_h2", "order", "pass"}) head.push_back(c);
  CsvWriter w(os, head);
  bool ok = true;
  const double h = 1e-2;
  for (int trial = 0; trial < 8; ++trial) {
    Point p(n);
    for (double& x : p) x = U(rng);
    for (int i = 0; i < hm; ++i)
      for (int j = i + 1; j < hm; ++j) {
        const Coeffs b = g->lie_bracket(i, j, p);
        const Coeffs f1 = fd_bracket(*g, i, j, 1.0, p, h), f2 = fd_bracket(*g, i, j, 1.0, p, h / 2);
        double e1 = 0, e2 = 0;
        for (int a = 0; a < n; ++a) {
          e1 = std::max(e1, std::abs(f1[a] - b[a]));
          e2 = std::max(e2, std::abs(f2[a] - b[a]));
        }
        const bool exact = e2 <= 1e-12;
        const double order = exact ? std::numeric_limits<double>::infinity() : std::log2(e1 / e2);
        const bool pass = exact || order >= 1.9;
        ok = ok && pass;
        CsvRow r = {std::to_string(i), std::to_string(j)};
        for (double x : p) r.push_back(num17(x));
        for (double x : b) r.push_back(num17(x));
        r.push_back(num17(e1));
        r.push_back(num17(e2));
        r.push_back(exact ? "exact" : num17(order));
        r.push_back(pass ? "1" : "0");
        w.row(r);
      }
  }
  io.out << "brackets: " << (ok ? "pass" : "FAIL") << " (frame spans, FD commutator order >= 1.9)\n";
  return ok;
}

inline bool verify_barriers(const Settings& s, const fs::path& out, Streams io) {
  const auto& b = s.barriers;
  bool ok = true;
  auto dump = [&](const std::string& name, const ResidualReport& r, int n) {
    auto os = open_out(out / name);
    CsvRow head = {"sample"};
    for (int a = 0; a < n; ++a) head.push_back("p" + std::to_string(a));
    head.push_back("t");
    head.push_back("residual");
    CsvWriter w(os, head);
    for (std::size_t k = 0; k < r.samples.size(); ++k) {
      CsvRow row = {std::to_string(k)};
      for (double x : r.samples[k].p) row.push_back(num17(x));
      row.push_back(num17(r.samples[k].t));
      row.push_back(num17(r.residuals[k]));
      w.row(row);
    }
  };
  if (b.check == "cubic" || b.check == "both") {
    const Group se2 = Group::validate(GroupSpec::se2());
    CubicBarrier cb{b.epsilon, b.delta, b.C};
    const auto samples = sample_points(se2, static_cast<std::size_t>(b.samples), b.r_max, b.t_max, s.seed);
    const auto r = check_cubic_subsolution(cb, samples, b.fd_h);
    dump("barrier_cubic.csv", r, 3);
    io.out << "barriers cubic: max residual " << num17(r.extreme) << " (tol " << num17(r.tol) << ", C = " << num17(b.C)
           << ", trivial " << r.trivial << "/" << r.count << ") " << (r.pass ? "pass" : "FAIL") << "\n";
    ok = ok && r.pass;
  }
  if (b.check == "exp" || b.check == "both") {
    const Group g = Group::validate(to_group_spec(s.group));
    ExpBarrier eb;
    eb.sigma = b.sigma;
    eb.alpha = b.alpha;
    eb.T = b.T;
    eb.h_kind = g.is_se2() ? HKind::SE2HalfSquare : HKind::CarnotMixed;
    const auto samples = sample_points(g, static_cast<std::size_t>(b.samples), b.r_max, std::min(b.t_max, b.T), s.seed);
    const auto r = check_exp_supersolution(eb, g, samples, b.epsilon, b.delta, b.fd_h);
    dump("barrier_exp.csv", r, g.n());
    io.out << "barriers exp: min residual " << num17(r.extreme) << " (tol " << num17(r.tol) << ") "
           << (r.pass ? "pass" : "FAIL") << "\n";
    ok = ok && r.pass;
  }
  return ok;
}

inline bool verify_phi(const Settings& s, const fs::path& out, Streams io) {
  const Group g = Group::validate(to_group_spec(s.group));
  const PhiParams p = to_phi_params(s.phi);
  bool ok = true;
  const FdCheck fd = fd_derivative_check(p, g, static_cast<std::size_t>(s.phi.fd_pairs), s.seed, s.phi.fd_h);
  {
    auto os = open_out(out / "phi_fd.csv");
    CsvWriter w(os, {"pairs", "first_error", "second_error", "pass"});
    w.row({std::to_string(fd.pairs), num17(fd.first_error), num17(fd.second_error), fd.pass() ? "1" : "0"});
  }
  io.out << "phi fd: first " << num17(fd.first_error) << ", second " << num17(fd.second_error) << " "
         << (fd.pass() ? "pass" : "FAIL") << "\n";
  ok = ok && fd.pass();

  auto audits = audit_lemma42(p, g, static_cast<std::size_t>(s.phi.samples), s.seed);
  for (auto& a : audit_lemma44(p, g, static_cast<std::size_t>(s.phi.samples), s.seed)) audits.push_back(std::move(a));
  {
    auto os = open_out(out / "phi_audit.csv");
    CsvRow head = {"bound", "count", "ratio", "ratio_doubled", "drift", "stable", "bounded", "probe_extreme", "pass"};
    for (int a = 0; a < g.n(); ++a) head.push_back("xi" + std::to_string(a));
    for (int a = 0; a < g.n(); ++a) head.push_back("eta" + std::to_string(a));
    CsvWriter w(os, head);
    for (const auto& a : audits) {
      CsvRow r = {a.id, std::to_string(a.count), num17(a.ratio), num17(a.ratio_doubled), num17(a.drift),
                  a.stable ? "1" : "0", a.bounded ? "1" : "0", num17(a.probe_max), a.pass() ? "1" : "0"};
      for (int q = 0; q < g.n(); ++q) r.push_back(a.argmax_xi.empty() ? "" : num17(a.argmax_xi[q]));
      for (int q = 0; q < g.n(); ++q) r.push_back(a.argmax_eta.empty() ? "" : num17(a.argmax_eta[q]));
      w.row(r);
    }
  }
  for (const auto& a : audits) {
    io.out << "phi " << a.id << ": " << (a.lower ? "min" : "max") << " ratio " << num17(a.ratio) << " drift "
           << num17(a.drift) << (a.bounded ? "" : " unbounded-on-probe") << " " << (a.pass() ? "pass" : "FAIL")
           << "\n";
    ok = ok && a.pass();
  }
  const auto z = check_zero_gradient_implication(p, g, 1000, s.seed);
  io.out << "phi zero_gradient: max |grad0_eta| " << num17(z.max_eta) << " " << (z.pass ? "pass" : "FAIL") << "\n";
  return ok && z.pass;
}

inline int verify(const Settings& s, const std::string& which, const fs::path& out, Streams io) {
  bool ok = true;
  if (which == "brackets" || which == "all") ok = verify_brackets(s, out, io) && ok;
  if (which == "barriers" || which == "all") ok = verify_barriers(s, out, io) && ok;
  if (which == "phi" || which == "all") ok = verify_phi(s, out, io) && ok;
  return ok ? kExitOk : kExitCheckFailed;
}

inline int inpaint(const Settings& s, const fs::path& out, Streams io) {
  const auto& ip = s.inpaint;
  InpaintTask task;
  task.image = ip.image == "synthetic-bar" ? synthetic_bar(ip.rows, ip.cols, ip.bar_width) : read_pgm(ip.image);
  const int rows = task.image.rows, cols = task.image.cols;
  const std::size_t npx = static_cast<std::size_t>(rows) * cols;
  if (ip.mask == "synthetic-gap") {
    task.mask = synthetic_gap(rows, cols, ip.gap_width);
  } else if (ip.mask == "none" || ip.mask == "all") {
    task.mask.assign(npx, ip.mask == "all" ? 1 : 0);
  } else {
    const Image m = read_pgm(ip.mask);
    if (m.rows != rows || m.cols != cols) throw Error(ErrorCode::GridMismatch, "inpaint.mask: shape differs from image");
    for (double v : m.pixels) task.mask.push_back(v > 0.5 ? 1 : 0);
  }
  task.orientations = ip.orientations;
  task.scale = ip.scale;
  task.extent = ip.extent;
  task.epsilon = ip.epsilon;
  task.delta = ip.delta;
  task.T = ip.T;
  task.cfl_safety = ip.cfl_safety;
  task.snapshot_every = ip.snapshot_every;
  const InpaintResult r = srmcf::inpaint(task);

  Image before = task.image;
  for (std::size_t q = 0; q < npx; ++q)
    if (task.mask[q]) before.pixels[q] = 0;
  write_pgm(out / "input.pgm", before);
  write_pgm(out / "inpainted.pgm", r.output);
  for (std::size_t k = 0; k < r.snapshots.size(); ++k) write_snapshot(out / ("lift_" + snapshot_name(k)), r.snapshots[k]);
  io.out << "inpaint: " << r.steps << " steps; components at 0.5 before " << count_components(before, 0.5)
         << ", after " << count_components(r.output, 0.5) << "\n";
  return kExitOk;
}

inline int export_slice(const std::string& snapshot, int axis, int index, const fs::path& out, Streams io) {
  const ScalarField u = read_snapshot(snapshot);
  const Image img = extract_slice(u, axis, index);
  write_pgm(out / "slice.pgm", normalized(img));
  auto os = open_out(out / "slice.csv");
  write_image_csv(os, img);
  io.out << "export-slice: " << img.rows << " x " << img.cols << " written to " << out.string() << "\n";
  return kExitOk;
}

}  // namespace cli

/// Full command-line entry point; returns the process exit code.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Sub-Riemannian mean curvature flow toolkit"};
  app.require_subcommand(1);
  std::string config, outdir = "out", which = "all", snapshot;
  std::optional<std::uint64_t> seed;
  std::optional<int> nthreads;
  int axis = 2, index = 0;

  auto common = [&](CLI::App* c, bool need_config) {
    auto* o = c->add_option("--config", config, "config file");
    if (need_config) o->required();
    c->add_option("--out", outdir, "output directory");
    c->add_option("--seed", seed, "seed override");
    c->add_option("--threads", nthreads, "worker threads (0 = default)");
  };
  auto* sim = app.add_subcommand("simulate", "run the regularized flow");
  auto* swp = app.add_subcommand("sweep", "vanishing viscosity sweep");
  auto* ver = app.add_subcommand("verify", "barrier, phi and bracket checks");
  auto* inp = app.add_subcommand("inpaint", "SE(2) lift inpainting demo");
  auto* exs = app.add_subcommand("export-slice", "2D slice of a snapshot as PGM and CSV");
  for (auto* c : {sim, swp, ver, inp}) common(c, true);
  common(exs, false);
  ver->add_option("--which", which, "barriers | phi | brackets | all")
      ->check(CLI::IsMember({"barriers", "phi", "brackets", "all"}));
  exs->add_option("--snapshot", snapshot, "SRMCF1 file")->required();
  exs->add_option("--axis", axis, "axis held fixed (3D fields)");
  exs->add_option("--index", index, "index along that axis");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const cli::Streams io{out, err};
  try {
    const auto dir = cli::prepare_out(outdir);
    if (*exs) return cli::export_slice(snapshot, axis, index, dir, io);
    Settings s = load_settings(config);
    if (seed) s.seed = *seed;
    set_threads(nthreads ? *nthreads : s.flow.threads);
    if (*sim) return cli::simulate(s, dir, io);
    if (*swp) return cli::sweep(s, dir, io);
    if (*ver) return cli::verify(s, which, dir, io);
    if (*inp) return cli::inpaint(s, dir, io);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}

inline int run_cli(int argc, char** argv) {
  std::vector<std::string> a(argv + 1, argv + argc);
  return run_cli(std::move(a));
}

}  // namespace srmcf
