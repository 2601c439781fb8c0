#include "qapdc/report.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace qapdc {

using nlohmann::json;

SolveReport solve(const QapInstance& inst, const EpalmConfig& cfg) {
  if (cfg.variant == EpalmConfig::Variant::Epalm1)
    return epalm1_solve(inst, cfg);
  return epalm_solve(inst, cfg);
}

std::string report_to_json(const SolveReport& rep) {
  json j;
  j["instance"] = rep.instance;
  j["variant"] = rep.variant;
  j["seed"] = rep.seed;
  j["obj"] = rep.obj;
  if (rep.gap_pct)
    j["gap_pct"] = *rep.gap_pct;
  else
    j["gap_pct"] = nullptr;
  j["infeas"] = rep.infeas;
  j["time_s"] = rep.time_s;
  j["rank_out"] = rep.rank_out;
  j["final_rho"] = rep.final_rho;
  j["penalty_gap"] = rep.final_penalty_gap;
  j["feas"] = rep.final_feas;
  j["certified"] = rep.certified;
  j["hit_time_limit"] = rep.hit_time_limit;
  j["outer_iters"] = rep.outer_iters;
  std::vector<int> perm1;
  for (int v : rep.perm.image) perm1.push_back(v + 1);
  j["permutation"] = perm1;
  json sched = json::array();
  for (const auto& r : rep.schedule)
    sched.push_back({{"l", r.l},
                     {"rho", r.rho},
                     {"tau", r.tau},
                     {"penalty_gap", r.penalty_gap},
                     {"feas", r.feas},
                     {"alm_certified", r.alm_certified},
                     {"alm_iters", r.alm_iters}});
  j["schedule"] = sched;
  return j.dump(2);
}

namespace {

std::string fmt_gap(const SolveReport& rep) {
  if (!rep.gap_pct) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << *rep.gap_pct;
  return os.str();
}

std::string fmt_num(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::ostringstream os;
    os << static_cast<long long>(v);
    return os.str();
  }
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

void write_bench_csv(std::ostream& out, const std::vector<SolveReport>& reps,
                     const std::vector<double>& optvals) {
  out << "Prob.,Optval,Obj,gap%,infeas,time,seed,variant\n";
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    out << r.instance << ',';
    if (i < optvals.size() && std::isfinite(optvals[i]))
      out << fmt_num(optvals[i]);
    else
      out << "n/a";
    out << ',' << fmt_num(r.obj) << ',' << fmt_gap(r) << ','
        << std::scientific << std::setprecision(1) << r.infeas
        << std::defaultfloat << ',' << std::fixed << std::setprecision(1)
        << r.time_s << std::defaultfloat << ',' << r.seed << ','
        << r.variant << '\n';
  }
}

void write_bench_table(std::ostream& out,
                       const std::vector<SolveReport>& reps,
                       const std::vector<double>& optvals) {
  out << std::left << std::setw(10) << "Prob." << std::right << std::setw(12)
      << "Optval" << std::setw(12) << "Obj" << std::setw(8) << "gap%"
      << std::setw(11) << "infeas" << std::setw(9) << "time" << std::setw(6)
      << "seed" << '\n';
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    out << std::left << std::setw(10) << r.instance << std::right
        << std::setw(12)
        << ((i < optvals.size() && std::isfinite(optvals[i]))
                ? fmt_num(optvals[i])
                : std::string("n/a"))
        << std::setw(12) << fmt_num(r.obj) << std::setw(8) << fmt_gap(r)
        << std::setw(11) << std::scientific << std::setprecision(1)
        << r.infeas << std::defaultfloat << std::setw(9) << std::fixed
        << std::setprecision(1) << r.time_s << std::defaultfloat
        << std::setw(6) << r.seed << '\n';
  }
}

void write_alm_trace(std::ostream& out,
                     const std::vector<AlmTraceRecord>& trace) {
  for (const auto& r : trace) {
    json j = {{"k", r.k},   {"beta", r.beta}, {"r1", r.r1},
              {"r2", r.r2}, {"r3", r.r3},     {"phi", r.phi}};
    out << j.dump() << '\n';
  }
}

namespace {
constexpr char kMagic[4] = {'Q', 'D', 'C', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t get_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void put_block_rowmajor(std::ostream& out, const Matrix& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double v = M(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}
void get_block_rowmajor(std::istream& in, Matrix& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      M(i, j) = v;
    }
}
}  // namespace

void save_checkpoint(const std::string& path, const Matrix& V,
                     const MultiplierState& mult) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(V.rows()));
  put_u32(out, static_cast<std::uint32_t>(V.cols()));
  put_block_rowmajor(out, V);
  Matrix mu_row = mult.mu.transpose();
  put_block_rowmajor(out, mu_row);
  put_block_rowmajor(out, mult.Lambda);
  if (!out) throw Error(ErrorKind::Io, "short write on checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorKind::Io, "bad checkpoint magic: " + path);
  const std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw Error(ErrorKind::Io,
                "unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t m = get_u32(in);
  const std::uint32_t p = get_u32(in);
  const int n = static_cast<int>(std::lround(std::sqrt(double(p))));
  if (n * n != static_cast<int>(p))
    throw Error(ErrorKind::Io, "checkpoint p is not a perfect square");
  Checkpoint ck;
  ck.V.resize(m, p);
  get_block_rowmajor(in, ck.V);
  Matrix mu_row(1, 2 * n + 2);
  get_block_rowmajor(in, mu_row);
  ck.mult.mu = mu_row.transpose();
  ck.mult.Lambda.resize(p, p);
  get_block_rowmajor(in, ck.mult.Lambda);
  if (!in) throw Error(ErrorKind::Io, "truncated checkpoint: " + path);
  return ck;
}

}  // namespace qapdc
