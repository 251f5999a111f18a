#include "rbmpc/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rbmpc/riccati.hpp"

namespace rbmpc {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigError, "bad numeric value for " + key + ": " + v);
  }
}

long long parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    fail(ErrorCode::ConfigError, "bad integer value for " + key + ": " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  fail(ErrorCode::ConfigError, "bad boolean value for " + key + ": " + v);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream iss(v);
  while (std::getline(iss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::ConfigError, "cannot open config file " + path);
  RunConfig c;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::ConfigError,
           "expected key = value at " + path + ":" + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "problem") c.problem = value;
    else if (key == "n") c.n = static_cast<int>(parse_int(key, value));
    else if (key == "x0_mode") c.x0_mode = value;
    else if (key == "F_mode") c.F_mode = value;
    else if (key == "a_file") c.a_file = value;
    else if (key == "b_file") c.b_file = value;
    else if (key == "q_file") c.q_file = value;
    else if (key == "w_file") c.w_file = value;
    else if (key == "f_file") c.f_file = value;
    else if (key == "x0_file") c.x0_file = value;
    else if (key == "splitting_file") c.splitting_file = value;
    else if (key == "dt") c.plan.dt = parse_double(key, value);
    else if (key == "h") c.plan.h = parse_double(key, value);
    else if (key == "T") c.plan.T = parse_double(key, value);
    else if (key == "tau") c.plan.tau = parse_double(key, value);
    else if (key == "t_end") c.plan.t_end = parse_double(key, value);
    else if (key == "tol") c.tol = parse_double(key, value);
    else if (key == "max_iter") c.max_iter = static_cast<int>(parse_int(key, value));
    else if (key == "warm_start") c.warm_start = parse_bool(key, value);
    else if (key == "sweep_axis") c.sweep_axis = value;
    else if (key == "sweep_values") {
      c.sweep_values.clear();
      for (const auto& item : split_list(value))
        c.sweep_values.push_back(parse_double(key, item));
    } else if (key == "realizations") c.realizations = static_cast<int>(parse_int(key, value));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "seeds") {
      c.seeds.clear();
      for (const auto& item : split_list(value))
        c.seeds.push_back(static_cast<std::uint64_t>(parse_int(key, item)));
    } else if (key == "bench_n") {
      c.bench_n.clear();
      for (const auto& item : split_list(value))
        c.bench_n.push_back(static_cast<int>(parse_int(key, item)));
    } else if (key == "bench_repeats") c.bench_repeats = static_cast<int>(parse_int(key, value));
    else if (key == "out") c.out = value;
    else if (key == "jobs") c.jobs = static_cast<int>(parse_int(key, value));
    else if (key == "csv_states") c.csv_states = parse_bool(key, value);
    else fail(ErrorCode::ConfigError, "unknown config key: " + key);
  }
  return c;
}

void RunConfig::validate() const {
  if (problem != "heat-ring" && problem != "files")
    fail(ErrorCode::ConfigError, "problem must be heat-ring or files");
  if (x0_mode != "ones" && x0_mode != "zero" && x0_mode != "e1" && x0_mode != "sin")
    fail(ErrorCode::ConfigError, "x0_mode must be ones, zero, e1 or sin");
  if (F_mode != "zero" && F_mode != "pinf")
    fail(ErrorCode::ConfigError, "F_mode must be zero or pinf");
  if (tol <= 0.0) fail(ErrorCode::ConfigError, "tol must be positive");
  if (max_iter < 1) fail(ErrorCode::ConfigError, "max_iter must be >= 1");
  if (realizations < 1) fail(ErrorCode::ConfigError, "realizations must be >= 1");
  plan.validate();
}

std::string RunConfig::serialize() const {
  std::ostringstream os;
  os << "problem = " << problem << "\n";
  os << "n = " << n << "\n";
  os << "x0_mode = " << x0_mode << "\n";
  os << "F_mode = " << F_mode << "\n";
  if (!a_file.empty()) os << "a_file = " << a_file << "\n";
  if (!b_file.empty()) os << "b_file = " << b_file << "\n";
  if (!q_file.empty()) os << "q_file = " << q_file << "\n";
  if (!w_file.empty()) os << "w_file = " << w_file << "\n";
  if (!f_file.empty()) os << "f_file = " << f_file << "\n";
  if (!x0_file.empty()) os << "x0_file = " << x0_file << "\n";
  if (!splitting_file.empty()) os << "splitting_file = " << splitting_file << "\n";
  os << "dt = " << format_g17(plan.dt) << "\n";
  os << "h = " << format_g17(plan.h) << "\n";
  os << "T = " << format_g17(plan.T) << "\n";
  os << "tau = " << format_g17(plan.tau) << "\n";
  os << "t_end = " << format_g17(plan.t_end) << "\n";
  os << "tol = " << format_g17(tol) << "\n";
  os << "max_iter = " << max_iter << "\n";
  os << "warm_start = " << (warm_start ? "true" : "false") << "\n";
  os << "sweep_axis = " << sweep_axis << "\n";
  os << "sweep_values =";
  for (size_t i = 0; i < sweep_values.size(); ++i)
    os << (i ? "," : " ") << format_g17(sweep_values[i]);
  os << "\n";
  os << "realizations = " << realizations << "\n";
  os << "seed = " << seed << "\n";
  if (!seeds.empty()) {
    os << "seeds =";
    for (size_t i = 0; i < seeds.size(); ++i) os << (i ? "," : " ") << seeds[i];
    os << "\n";
  }
  os << "bench_n =";
  for (size_t i = 0; i < bench_n.size(); ++i) os << (i ? "," : " ") << bench_n[i];
  os << "\n";
  os << "bench_repeats = " << bench_repeats << "\n";
  os << "out = " << out << "\n";
  os << "jobs = " << jobs << "\n";
  os << "csv_states = " << (csv_states ? "true" : "false") << "\n";
  return os.str();
}

Matrix load_dense_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open matrix file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream iss(line);
    std::vector<double> row;
    double v;
    while (iss >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::IoError, "empty matrix file " + path);
  const size_t cols = rows[0].size();
  Matrix M(static_cast<int>(rows.size()), static_cast<int>(cols));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols)
      fail(ErrorCode::IoError, "ragged rows in matrix file " + path);
    for (size_t j = 0; j < cols; ++j) M(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  }
  return M;
}

namespace {

Splitting load_splitting_file(const std::string& path, int n) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open splitting file " + path);
  std::vector<SpMat> parts;
  std::vector<Subset> subsets;
  std::vector<Eigen::Triplet<double>> trips;
  bool in_part = false;
  auto flush_part = [&]() {
    if (!in_part) return;
    SpMat part(n, n);
    part.setFromTriplets(trips.begin(), trips.end());
    parts.push_back(std::move(part));
    trips.clear();
  };
  std::string line;
  while (std::getline(f, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream iss(line);
    std::string head;
    iss >> head;
    if (head == "part") {
      flush_part();
      in_part = true;
    } else if (head == "subset") {
      flush_part();
      in_part = false;
      Subset s;
      iss >> s.probability;
      int idx;
      while (iss >> idx) s.members.push_back(idx);
      subsets.push_back(std::move(s));
    } else {
      if (!in_part) fail(ErrorCode::IoError, "triplet outside a part block in " + path);
      std::istringstream entry(line);
      int i, j;
      double v;
      if (!(entry >> i >> j >> v))
        fail(ErrorCode::IoError, "bad triplet line in " + path + ": " + line);
      trips.emplace_back(i, j, v);
    }
  }
  flush_part();
  return build_splitting(std::move(parts), std::move(subsets));
}

}  // namespace

ProblemBundle build_problem(const RunConfig& config) {
  ProblemBundle bundle;
  if (config.problem == "heat-ring") {
    auto [prob, split] = heat_ring_example(config.n);
    bundle.problem = std::move(prob);
    bundle.splitting = std::move(split);
  } else {
    LqProblem prob;
    prob.A = load_dense_matrix(config.a_file).sparseView();
    prob.B = load_dense_matrix(config.b_file);
    prob.Q = load_dense_matrix(config.q_file).sparseView();
    prob.W = load_dense_matrix(config.w_file);
    if (!config.f_file.empty()) prob.F = load_dense_matrix(config.f_file).sparseView();
    else prob.F = SpMat(prob.A.rows(), prob.A.cols());
    if (!config.x0_file.empty()) prob.x0 = Vector(load_dense_matrix(config.x0_file).reshaped());
    else prob.x0 = Vector::Ones(prob.A.rows());
    prob.validate();
    bundle.problem = std::move(prob);
    bundle.splitting = config.splitting_file.empty()
                           ? full_batch_splitting(bundle.problem.A)
                           : load_splitting_file(config.splitting_file,
                                                 bundle.problem.n());
  }

  const int n = bundle.problem.n();
  if (config.x0_mode == "zero") bundle.problem.x0 = Vector::Zero(n);
  else if (config.x0_mode == "e1") {
    bundle.problem.x0 = Vector::Zero(n);
    bundle.problem.x0[0] = 1.0;
  } else if (config.x0_mode == "sin") {
    for (int i = 0; i < n; ++i)
      bundle.problem.x0[i] = std::sin(2.0 * M_PI * static_cast<double>(i) / n);
  }
  // "ones" keeps the constructor default.

  if (config.F_mode == "pinf") {
    const StabilizedLoop loop = solve_are(bundle.problem);
    bundle.problem.F = loop.Pinf.sparseView();
  }
  return bundle;
}

void write_manifest(const RunConfig& config, const std::string& dir,
                    const std::string& extra) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const std::string path = dir + "/manifest.txt";
  std::ofstream f(path);
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  f << "# " << kVersion << "\n";
  f << config.serialize();
  if (!extra.empty()) f << extra;
  if (!f) fail(ErrorCode::IoError, "write failed for " + path);
}

}  // namespace rbmpc
