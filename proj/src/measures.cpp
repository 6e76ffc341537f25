#include "jkoflow/measures.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "jkoflow/error.hpp"
#include "jkoflow/random.hpp"

namespace fs = std::filesystem;

namespace jkoflow {

namespace {

constexpr double kWeightSumTol = 1e-9;

void validate_snapshot(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights) {
  if (points.rows() < 1 || points.cols() < 1)
    throw ValidationError("snapshot needs at least one particle and one dimension");
  if (weights.size() != points.rows())
    throw ValidationError("snapshot weight count " + std::to_string(weights.size()) +
                          " does not match particle count " + std::to_string(points.rows()));
  for (Index i = 0; i < points.rows(); ++i) {
    if (!points.row(i).allFinite())
      throw ValidationError("non-finite coordinate in particle " + std::to_string(i));
    if (!std::isfinite(weights(i)) || weights(i) < 0.0)
      throw ValidationError("invalid weight in particle " + std::to_string(i));
  }
  if (std::abs(weights.sum() - 1.0) > kWeightSumTol)
    throw ValidationError("snapshot weights sum to " + format_double(weights.sum()) +
                          ", expected 1");
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec == std::errc::result_out_of_range) {
    out = std::strtod(t.c_str(), nullptr);
    return true;
  }
  return ec == std::errc() && ptr == last;
}

[[noreturn]] void fail_at(const fs::path& file, std::size_t row, const std::string& what) {
  throw ValidationError(file.string() + ":" + std::to_string(row) + ": " + what);
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("cannot format double");
  return std::string(buf, ptr);
}

// --- EmpiricalSnapshot ------------------------------------------------------

EmpiricalSnapshot::EmpiricalSnapshot(Eigen::MatrixXd points, Eigen::VectorXd weights,
                                     int time_index)
    : points_(std::move(points)), weights_(std::move(weights)), time_index_(time_index) {
  if (time_index_ < 0) throw ValidationError("negative time index");
  validate_snapshot(points_, weights_);
}

EmpiricalSnapshot EmpiricalSnapshot::uniform(Eigen::MatrixXd points, int time_index) {
  const Index n = points.rows();
  if (n < 1) throw ValidationError("snapshot needs at least one particle");
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return EmpiricalSnapshot(std::move(points), std::move(w), time_index);
}

EmpiricalSnapshot EmpiricalSnapshot::with_time_index(int t) const {
  return EmpiricalSnapshot(points_, weights_, t);
}

// --- PopulationTrajectory ----------------------------------------------------

PopulationTrajectory::PopulationTrajectory(std::vector<EmpiricalSnapshot> snapshots, double tau,
                                           Provenance provenance)
    : snapshots_(std::move(snapshots)), tau_(tau), provenance_(std::move(provenance)) {
  if (snapshots_.empty()) throw ValidationError("trajectory has no snapshots");
  if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw ValidationError("tau must be positive");
  dim_ = snapshots_.front().dim();
  for (std::size_t t = 0; t < snapshots_.size(); ++t) {
    if (snapshots_[t].time_index() != static_cast<int>(t))
      throw ValidationError("snapshot " + std::to_string(t) + " has time index " +
                            std::to_string(snapshots_[t].time_index()));
    if (snapshots_[t].dim() != dim_)
      throw ValidationError("snapshot " + std::to_string(t) + " has dimension " +
                            std::to_string(snapshots_[t].dim()) + ", expected " +
                            std::to_string(dim_));
  }
}

// --- Coupling ----------------------------------------------------------------

double Coupling::total_mass() const {
  double s = 0.0;
  for (const auto& p : pairs) s += p.mass;
  return s;
}

double Coupling::cost(const EmpiricalSnapshot& source, const EmpiricalSnapshot& target,
                      int exponent) const {
  double c = 0.0;
  for (const auto& p : pairs) {
    const double dist = (source.points().row(p.source) - target.points().row(p.target)).norm();
    c += p.mass * (exponent == 1 ? dist : dist * dist);
  }
  return c;
}

double marginal_violation(const Coupling& coupling, const EmpiricalSnapshot& source,
                          const EmpiricalSnapshot& target) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(source.size());
  Eigen::VectorXd col = Eigen::VectorXd::Zero(target.size());
  for (const auto& p : coupling.pairs) {
    row(p.source) += p.mass;
    col(p.target) += p.mass;
  }
  return std::max((row - source.weights()).cwiseAbs().maxCoeff(),
                  (col - target.weights()).cwiseAbs().maxCoeff());
}

void check_coupling(const Coupling& coupling, const EmpiricalSnapshot& source,
                    const EmpiricalSnapshot& target, double tol) {
  for (const auto& p : coupling.pairs) {
    if (p.source < 0 || p.source >= source.size() || p.target < 0 || p.target >= target.size())
      throw ValidationError("coupling index out of range");
    if (!(p.mass >= 0.0) || !std::isfinite(p.mass))
      throw ValidationError("coupling has a negative or non-finite mass");
  }
  if (std::abs(coupling.total_mass() - 1.0) > tol)
    throw ValidationError("coupling mass sums to " + format_double(coupling.total_mass()));
  const double v = marginal_violation(coupling, source, target);
  if (v > tol) throw ValidationError("coupling marginal violation " + format_double(v));
}

// --- files ---------------------------------------------------------------------

std::string snapshot_filename(int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "snapshot_%05d.csv", t);
  return buf;
}

std::string coupling_filename(int t) {
  return "coupling_" + std::to_string(t) + "_" + std::to_string(t + 1) + ".csv";
}

void save_snapshot(const EmpiricalSnapshot& snapshot, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (Index k = 0; k < snapshot.dim(); ++k) out << 'x' << k << ',';
  out << "weight\n";
  std::string line;
  for (Index i = 0; i < snapshot.size(); ++i) {
    line.clear();
    for (Index k = 0; k < snapshot.dim(); ++k) {
      line += format_double(snapshot.points()(i, k));
      line += ',';
    }
    line += format_double(snapshot.weights()(i));
    line += '\n';
    out << line;
  }
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

EmpiricalSnapshot load_snapshot(const fs::path& file, int time_index,
                                std::optional<Index> expected_dim) {
  std::ifstream in(file);
  if (!in) throw ValidationError("missing snapshot file " + file.string());
  std::string line;
  std::size_t row = 0;
  bool has_weight = false;
  std::optional<std::size_t> columns;
  std::vector<std::vector<double>> values;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (row == 1) {
      double probe = 0.0;
      if (!parse_double(cells.front(), probe)) {
        // header row
        has_weight = trim(cells.back()) == "weight";
        columns = cells.size();
        continue;
      }
    }
    if (!columns) {
      columns = cells.size();
      has_weight = expected_dim && static_cast<Index>(cells.size()) == *expected_dim + 1;
    }
    if (cells.size() != *columns)
      fail_at(file, row, "expected " + std::to_string(*columns) + " columns, found " +
                             std::to_string(cells.size()));
    std::vector<double> v(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], v[c]))
        fail_at(file, row, "cannot parse value '" + trim(cells[c]) + "'");
      if (!std::isfinite(v[c])) fail_at(file, row, "non-finite value");
    }
    values.push_back(std::move(v));
  }
  if (values.empty()) throw ValidationError(file.string() + ": snapshot has no particles");
  const Index d = static_cast<Index>(*columns) - (has_weight ? 1 : 0);
  if (d < 1) throw ValidationError(file.string() + ": no coordinate columns");
  if (expected_dim && d != *expected_dim)
    throw ValidationError(file.string() + ": dimension " + std::to_string(d) +
                          " does not match metadata dim " + std::to_string(*expected_dim));
  const Index n = static_cast<Index>(values.size());
  Eigen::MatrixXd points(n, d);
  Eigen::VectorXd weights(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) points(i, k) = values[i][k];
    weights(i) = has_weight ? values[i][d] : 1.0 / static_cast<double>(n);
  }
  try {
    return EmpiricalSnapshot(std::move(points), std::move(weights), time_index);
  } catch (const ValidationError& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
}

void save_trajectory(const PopulationTrajectory& traj, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json meta;
  meta["tau"] = traj.tau();
  meta["dim"] = traj.dim();
  meta["timesteps"] = traj.steps();
  if (!traj.provenance().generator.is_null()) meta["generator"] = traj.provenance().generator;
  if (traj.provenance().seed) meta["seed"] = *traj.provenance().seed;
  std::ofstream out(dir / "metadata.json");
  if (!out) throw std::runtime_error("cannot write " + (dir / "metadata.json").string());
  out << meta.dump(2) << '\n';
  for (std::size_t t = 0; t < traj.size(); ++t)
    save_snapshot(traj[t], dir / snapshot_filename(static_cast<int>(t)));
}

PopulationTrajectory load_trajectory(const fs::path& dir) {
  const fs::path meta_file = dir / "metadata.json";
  std::ifstream in(meta_file);
  if (!in) throw ValidationError("missing metadata file " + meta_file.string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(meta_file.string() + ": malformed JSON: " + e.what());
  }
  double tau = 0.0;
  Index dim = 0;
  std::size_t steps = 0;
  Provenance prov;
  try {
    tau = meta.at("tau").get<double>();
    dim = meta.at("dim").get<Index>();
    steps = meta.at("timesteps").get<std::size_t>();
    if (meta.contains("generator")) prov.generator = meta["generator"];
    if (meta.contains("seed") && !meta["seed"].is_null())
      prov.seed = meta["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(meta_file.string() + ": malformed metadata: " + e.what());
  }
  if (dim < 1) throw ValidationError(meta_file.string() + ": dim must be positive");
  std::vector<EmpiricalSnapshot> snaps;
  snaps.reserve(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t)
    snaps.push_back(load_snapshot(dir / snapshot_filename(static_cast<int>(t)),
                                  static_cast<int>(t), dim));
  try {
    return PopulationTrajectory(std::move(snaps), tau, std::move(prov));
  } catch (const ValidationError& e) {
    throw ValidationError(meta_file.string() + ": " + e.what());
  }
}

void save_coupling(const Coupling& coupling, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "i,j,mass\n";
  for (const auto& p : coupling.pairs)
    out << p.source << ',' << p.target << ',' << format_double(p.mass) << '\n';
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

Coupling load_coupling(const fs::path& file, int source_time) {
  std::ifstream in(file);
  if (!in) throw ValidationError("missing coupling file " + file.string());
  Coupling c;
  c.source_time = source_time;
  c.target_time = source_time + 1;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto cells = split_csv(line);
    if (row == 1 && trim(cells.front()) == "i") continue;
    if (cells.size() != 3) fail_at(file, row, "expected 3 columns");
    double i = 0, j = 0, m = 0;
    if (!parse_double(cells[0], i) || !parse_double(cells[1], j) || !parse_double(cells[2], m))
      fail_at(file, row, "cannot parse coupling row");
    if (!std::isfinite(m) || m < 0.0) fail_at(file, row, "invalid mass");
    c.pairs.push_back({static_cast<Index>(i), static_cast<Index>(j), m});
  }
  return c;
}

// --- splitting -------------------------------------------------------------------

std::pair<PopulationTrajectory, PopulationTrajectory> split_train_test(
    const PopulationTrajectory& traj, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw ValidationError("train fraction must lie in (0, 1)");
  std::vector<EmpiricalSnapshot> train, test;
  for (std::size_t t = 0; t < traj.size(); ++t) {
    const auto& snap = traj[t];
    const Index n = snap.size();
    if (n < 2) throw ValidationError("snapshot " + std::to_string(t) + " has fewer than 2 particles");
    CounterRng rng(seed, 0x5b11, t);
    auto order = random_permutation(n, rng);
    Index n_train = static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
    n_train = std::clamp<Index>(n_train, 1, n - 1);
    auto take = [&](Index begin, Index end) {
      std::vector<Index> idx(order.begin() + begin, order.begin() + end);
      std::sort(idx.begin(), idx.end());
      Eigen::MatrixXd pts(static_cast<Index>(idx.size()), snap.dim());
      Eigen::VectorXd w(static_cast<Index>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) {
        pts.row(static_cast<Index>(k)) = snap.points().row(idx[k]);
        w(static_cast<Index>(k)) = snap.weights()(idx[k]);
      }
      const double s = w.sum();
      if (s > 0.0)
        w /= s;
      else
        w.setConstant(1.0 / static_cast<double>(w.size()));
      return EmpiricalSnapshot(std::move(pts), std::move(w), static_cast<int>(t));
    };
    train.push_back(take(0, n_train));
    test.push_back(take(n_train, n));
  }
  return {PopulationTrajectory(std::move(train), traj.tau(), traj.provenance()),
          PopulationTrajectory(std::move(test), traj.tau(), traj.provenance())};
}

}  // namespace jkoflow
