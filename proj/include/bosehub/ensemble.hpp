#pragma once

// Disorder ensembles over a (tau, delta) grid.
//
// Every (cell, realization) pair is an independent task. Realization r of
// cell c draws its detunings from derive_seed(master_seed, c, r), so results
// do not depend on the worker count or on scheduling; each cell is reduced in
// realization order once all of its tasks are done. Cell index is
// i_delta * |tau_grid| + i_tau.

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bosehub/analysis.hpp"
#include "bosehub/eigensolver.hpp"
#include "bosehub/errors.hpp"
#include "bosehub/fock.hpp"
#include "bosehub/hamil.hpp"
#include "bosehub/io.hpp"
#include "bosehub/pert.hpp"

#ifndef BOSEHUB_VERSION
#define BOSEHUB_VERSION "dev"
#endif

namespace bosehub::ensemble {

inline constexpr const char* kCodeVersion = BOSEHUB_VERSION;

struct Observables {
  bool ipr_s = true;
  bool ipr_r = true;
  bool energy = true;
  bool fidelities = false;
  bool tau_c = false;
};

struct EnsembleSpec {
  int L = 8;
  int N = 4;
  Boundary boundary = Boundary::open;
  std::vector<double> tau_grid;
  std::vector<double> delta_grid;
  int realizations = 1;
  std::uint64_t master_seed = 0;
  Observables observables;
  LanczosOptions solver;

  std::size_t cells() const { return tau_grid.size() * delta_grid.size(); }

  void validate() const {
    if (L < 2) throw std::domain_error("EnsembleSpec: L must be >= 2");
    if (N < 2) throw std::domain_error("EnsembleSpec: N must be >= 2");
    if (realizations < 1) throw std::domain_error("EnsembleSpec: realizations must be >= 1");
    if (tau_grid.empty() || delta_grid.empty()) throw std::domain_error("EnsembleSpec: grids must be non-empty");
    auto ascending = [](const std::vector<double>& g) {
      for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) return false;
      return true;
    };
    if (!ascending(tau_grid) || !ascending(delta_grid)) throw std::domain_error("EnsembleSpec: grids must be ascending");
    if (tau_grid.front() < 0 || delta_grid.front() < 0) throw std::domain_error("EnsembleSpec: grid values must be >= 0");
    if (boundary == Boundary::periodic && L < 3) throw std::domain_error("EnsembleSpec: periodic chain needs L >= 3");
    basis_size(L, N);
  }
};

inline std::string canonical(const EnsembleSpec& s) {
  std::ostringstream os;
  os << "L=" << s.L << ";N=" << s.N << ";boundary=" << to_string(s.boundary) << ";tau=";
  for (double t : s.tau_grid) os << io::format_double(t) << ',';
  os << ";delta=";
  for (double d : s.delta_grid) os << io::format_double(d) << ',';
  os << ";realizations=" << s.realizations << ";seed=" << s.master_seed << ";obs=" << s.observables.ipr_s
     << s.observables.ipr_r << s.observables.energy << s.observables.fidelities << ";tol="
     << io::format_double(s.solver.tol) << ";krylov=" << s.solver.krylov_dim << ";keep=" << s.solver.keep
     << ";restarts=" << s.solver.max_restarts << ";start=" << s.solver.seed << ";version=" << kCodeVersion;
  return os.str();
}

// 64-bit FNV-1a
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string spec_hash(const EnsembleSpec& s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical(s))));
  return buf;
}

// ---------------------------------------------------------------------------

struct Stat {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double se = std::numeric_limits<double>::quiet_NaN();  // NaN when fewer than two samples
};

inline Stat summarize(const std::vector<double>& x) {
  Stat s;
  const auto n = x.size();
  if (n == 0) return s;
  double sum = 0;
  for (double v : x) sum += v;
  s.mean = sum / double(n);
  if (n < 2) return s;
  double ss = 0;
  for (double v : x) ss += (v - s.mean) * (v - s.mean);
  s.se = std::sqrt(ss / double(n - 1) / double(n));
  return s;
}

struct CellResult {
  std::size_t cell = 0;
  double tau = 0;
  double delta = 0;
  int used = 0;
  int skipped = 0;
  Stat ipr_s, ipr_r, energy;
  std::map<std::string, Stat> fidelity;  // localized / w / superfluid
};

struct Realization {
  bool skipped = false;
  double ipr_s = 0, ipr_r = 0, energy = 0;
  std::map<std::string, double> fidelity;
};

class CellError : public std::runtime_error {
public:
  CellError(const std::string& what, std::size_t cell, double tau, double delta)
      : std::runtime_error("cell " + std::to_string(cell) + " (tau=" + io::format_double(tau) +
                           ", delta=" + io::format_double(delta) + "): " + what),
        cell_(cell) {}
  std::size_t cell() const noexcept { return cell_; }

private:
  std::size_t cell_;
};

// Physical model for one draw: U = 1, J = tau (N-1), omega in [-delta (N-1), delta (N-1)].
inline ModelParams realization_params(const EnsembleSpec& spec, std::size_t cell, int r, double tau, double delta) {
  ModelParams p;
  p.L = spec.L;
  p.N = spec.N;
  p.U = 1.0;
  p.J = tau * (spec.N - 1);
  p.boundary = spec.boundary;
  p.omega = sample_disorder(spec.L, delta * (spec.N - 1), derive_seed(spec.master_seed, cell, std::uint64_t(r)));
  return p;
}

inline Realization run_realization(const EnsembleSpec& spec, const SectorBasis& basis, std::size_t cell, int r,
                                   double tau, double delta) {
  const ModelParams p = realization_params(spec, cell, r, tau, delta);
  const auto H = build_hamiltonian(p, basis);
  const auto gs = ground_state(H, spec.solver);
  const double unit = p.U * p.N * (p.N - 1);
  Realization out;
  const auto obs = analysis::observe(gs.vector, basis, p.boundary, gs.energy, unit);
  out.ipr_s = obs.ipr_s;
  out.ipr_r = obs.ipr_r;
  out.energy = obs.energy_scaled;
  if (spec.observables.fidelities) {
    try {
      std::vector<double> sigma(p.L);
      for (int l = 0; l < p.L; ++l) sigma[l] = p.omega[l] / (p.U * (p.N - 1));
      const auto loc = pert::localized_state(p, basis, pert::localized_ground_site(sigma, tau, p.boundary));
      out.fidelity["localized"] = analysis::overlap(gs.vector, loc);
      out.fidelity["w"] = analysis::overlap(gs.vector, pert::w_state(p, basis).vector);
      if (p.J > 0) out.fidelity["superfluid"] = analysis::overlap(gs.vector, pert::sf_state(p, basis));
    } catch (const SingularityError&) {
      out.skipped = true;
    } catch (const DegeneracyError&) {
      // periodic odd L: no unique superfluid reference state
    }
  }
  return out;
}

inline CellResult reduce_cell(std::size_t cell, double tau, double delta, const std::vector<Realization>& rs) {
  CellResult c;
  c.cell = cell;
  c.tau = tau;
  c.delta = delta;
  std::vector<double> ps, pr, en;
  std::map<std::string, std::vector<double>> fid;
  for (auto& r : rs) {
    if (r.skipped) {
      ++c.skipped;
      continue;
    }
    ++c.used;
    ps.push_back(r.ipr_s);
    pr.push_back(r.ipr_r);
    en.push_back(r.energy);
    for (auto& [k, v] : r.fidelity) fid[k].push_back(v);
  }
  c.ipr_s = summarize(ps);
  c.ipr_r = summarize(pr);
  c.energy = summarize(en);
  for (auto& [k, v] : fid) c.fidelity[k] = summarize(v);
  return c;
}

inline std::pair<double, double> cell_coordinates(const EnsembleSpec& spec, std::size_t cell) {
  const std::size_t nt = spec.tau_grid.size();
  return {spec.tau_grid[cell % nt], spec.delta_grid[cell / nt]};
}

// Sequential evaluation of one cell.
inline CellResult run_cell(const EnsembleSpec& spec, std::size_t cell) {
  spec.validate();
  if (cell >= spec.cells()) throw std::domain_error("run_cell: cell index out of range");
  const auto [tau, delta] = cell_coordinates(spec, cell);
  const SectorBasis basis(spec.L, spec.N);
  std::vector<Realization> rs;
  rs.reserve(spec.realizations);
  try {
    for (int r = 0; r < spec.realizations; ++r) rs.push_back(run_realization(spec, basis, cell, r, tau, delta));
  } catch (const std::exception& e) {
    throw CellError(e.what(), cell, tau, delta);
  }
  return reduce_cell(cell, tau, delta, rs);
}

// ---------------------------------------------------------------------------
// Checkpoint records (one JSON object per line)

inline nlohmann::json stat_json(const Stat& s) {
  auto num = [](double x) { return std::isnan(x) ? nlohmann::json(nullptr) : nlohmann::json(x); };
  return nlohmann::json::array({num(s.mean), num(s.se)});
}

inline Stat stat_from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& x) {
    return x.is_null() ? std::numeric_limits<double>::quiet_NaN() : x.get<double>();
  };
  return {num(j.at(0)), num(j.at(1))};
}

inline nlohmann::json to_json(const CellResult& c, const std::string& hash, std::uint64_t seed) {
  nlohmann::json j;
  j["spec_hash"] = hash;
  j["cell"] = c.cell;
  j["tau"] = c.tau;
  j["delta"] = c.delta;
  j["seed"] = seed;
  j["used"] = c.used;
  j["skipped"] = c.skipped;
  j["ipr_s"] = stat_json(c.ipr_s);
  j["ipr_r"] = stat_json(c.ipr_r);
  j["energy"] = stat_json(c.energy);
  nlohmann::json f = nlohmann::json::object();
  for (auto& [k, s] : c.fidelity) f[k] = stat_json(s);
  j["fidelity"] = f;
  return j;
}

inline CellResult cell_from_json(const nlohmann::json& j) {
  CellResult c;
  c.cell = j.at("cell").get<std::size_t>();
  c.tau = j.at("tau").get<double>();
  c.delta = j.at("delta").get<double>();
  c.used = j.at("used").get<int>();
  c.skipped = j.at("skipped").get<int>();
  c.ipr_s = stat_from_json(j.at("ipr_s"));
  c.ipr_r = stat_from_json(j.at("ipr_r"));
  c.energy = stat_from_json(j.at("energy"));
  for (auto& [k, v] : j.at("fidelity").items()) c.fidelity[k] = stat_from_json(v);
  return c;
}

// Completed cells for this spec; lines from other specs and a torn last line are ignored.
inline std::map<std::size_t, CellResult> load_checkpoint(const std::string& path, const EnsembleSpec& spec) {
  std::map<std::size_t, CellResult> done;
  std::ifstream is(path);
  if (!is) return done;
  const std::string hash = spec_hash(spec);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("spec_hash", "") != hash) continue;
    try {
      auto c = cell_from_json(j);
      if (c.cell < spec.cells()) done[c.cell] = std::move(c);
    } catch (const nlohmann::json::exception&) {
    }
  }
  return done;
}

// ---------------------------------------------------------------------------

struct PhaseGrid {
  EnsembleSpec spec;
  std::vector<CellResult> cells;  // indexed by cell
  int skipped_total = 0;
  int workers = 1;
  double wall_seconds = 0;
  std::size_t resumed_cells = 0;

  const CellResult& at(std::size_t i_tau, std::size_t i_delta) const {
    return cells.at(i_delta * spec.tau_grid.size() + i_tau);
  }
};

struct RunOptions {
  int workers = 1;
  std::string checkpoint;  // empty: no checkpointing
  std::function<void(std::size_t done, std::size_t total)> progress;
};

inline PhaseGrid phase_diagram(const EnsembleSpec& spec, const RunOptions& opt = {}) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t ncell = spec.cells();
  const std::string hash = spec_hash(spec);
  PhaseGrid grid;
  grid.spec = spec;
  grid.workers = std::max(1, opt.workers);
  grid.cells.resize(ncell);

  std::vector<char> have(ncell, 0);
  if (!opt.checkpoint.empty()) {
    for (auto& [i, c] : load_checkpoint(opt.checkpoint, spec)) {
      grid.cells[i] = c;
      have[i] = 1;
      ++grid.resumed_cells;
    }
  }
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < ncell; ++i)
    if (!have[i]) pending.push_back(i);

  const SectorBasis basis(spec.L, spec.N);
  const std::size_t R = std::size_t(spec.realizations);
  const std::size_t ntask = pending.size() * R;
  std::vector<std::vector<Realization>> results(pending.size(), std::vector<Realization>(R));
  std::vector<std::atomic<std::size_t>> remaining(pending.size());
  for (auto& r : remaining) r.store(R);

  std::ofstream ck;
  if (!opt.checkpoint.empty()) {
    // A run killed mid-write leaves a torn last line; terminate it so the next record starts clean.
    bool torn = false;
    if (std::ifstream in{opt.checkpoint, std::ios::binary | std::ios::ate}; in && in.tellg() > 0) {
      in.seekg(-1, std::ios::end);
      torn = in.get() != '\n';
    }
    ck.open(opt.checkpoint, std::ios::app);
    if (!ck) throw std::runtime_error("cannot open checkpoint " + opt.checkpoint);
    if (torn) ck << '\n' << std::flush;
  }
  std::mutex out_mutex;
  std::size_t done_cells = grid.resumed_cells;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;

  auto worker = [&] {
    while (!failed.load()) {
      const std::size_t t = next.fetch_add(1);
      if (t >= ntask) return;
      const std::size_t slot = t / R;
      const int r = int(t % R);
      const std::size_t cell = pending[slot];
      const auto [tau, delta] = cell_coordinates(spec, cell);
      try {
        results[slot][r] = run_realization(spec, basis, cell, r, tau, delta);
      } catch (const std::exception& e) {
        std::lock_guard lock(out_mutex);
        if (!failed.exchange(true)) error = std::make_exception_ptr(CellError(e.what(), cell, tau, delta));
        return;
      }
      if (remaining[slot].fetch_sub(1) == 1) {
        CellResult c = reduce_cell(cell, tau, delta, results[slot]);
        results[slot].clear();
        results[slot].shrink_to_fit();
        std::lock_guard lock(out_mutex);
        if (ck.is_open()) {
          ck << to_json(c, hash, spec.master_seed).dump() << '\n';
          ck.flush();
        }
        grid.cells[cell] = std::move(c);
        ++done_cells;
        if (opt.progress) opt.progress(done_cells, ncell);
      }
    }
  };

  const int nthreads = int(std::min<std::size_t>(std::size_t(grid.workers), std::max<std::size_t>(ntask, 1)));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  for (auto& c : grid.cells) grid.skipped_total += c.skipped;
  grid.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return grid;
}

// ---------------------------------------------------------------------------

struct CriticalRow {
  int N = 0;
  double delta = 0;
  double tau_c_s = 0;
  double tau_c_r = 0;
};

// Critical hopping for every delta of an already computed grid.
inline std::vector<CriticalRow> critical_taus(const PhaseGrid& g) {
  std::vector<CriticalRow> rows;
  const auto& tau = g.spec.tau_grid;
  for (std::size_t id = 0; id < g.spec.delta_grid.size(); ++id) {
    std::vector<double> ps, pr;
    for (std::size_t it = 0; it < tau.size(); ++it) {
      ps.push_back(g.at(it, id).ipr_s.mean);
      pr.push_back(g.at(it, id).ipr_r.mean);
    }
    rows.push_back({g.spec.N, g.spec.delta_grid[id], analysis::critical_tau(tau, ps), analysis::critical_tau(tau, pr)});
  }
  return rows;
}

// (N, delta) -> (tau_c^s, tau_c^r), one phase diagram per N.
inline std::vector<CriticalRow> critical_tau_sweep(const EnsembleSpec& base, const std::vector<int>& N_list,
                                                   const RunOptions& opt = {}) {
  if (base.tau_grid.size() < 5) throw std::domain_error("critical_tau_sweep: need at least 5 tau points");
  std::vector<CriticalRow> out;
  for (int N : N_list) {
    EnsembleSpec s = base;
    s.N = N;
    RunOptions o = opt;
    if (!o.checkpoint.empty()) o.checkpoint += ".N" + std::to_string(N);
    auto rows = critical_taus(phase_diagram(s, o));
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid helpers

inline std::vector<double> log_grid(double lo, double hi, int n) {
  if (n < 1 || !(lo > 0) || !(hi >= lo)) throw std::domain_error("log_grid: need n >= 1 and 0 < lo <= hi");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = n == 1 ? lo : lo * std::pow(hi / lo, double(i) / (n - 1));
  if (n > 1) g.back() = hi;
  return g;
}

inline std::vector<double> lin_grid(double lo, double hi, int n) {
  if (n < 1 || !(hi >= lo)) throw std::domain_error("lin_grid: need n >= 1 and lo <= hi");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = n == 1 ? lo : lo + (hi - lo) * double(i) / (n - 1);
  return g;
}

}  // namespace bosehub::ensemble
