#include "dtsp/atsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "dtsp/errors.hpp"

namespace dtsp {

ATSPInstance::ATSPInstance(std::size_t n_, std::vector<Cost> cost_) : n(n_), cost(std::move(cost_)) {
  if (cost.size() != n * n)
    throw UsageError("ATSPInstance: matrix size does not match N");
}

void ATSPInstance::validate() const {
  if (n < 2)
    throw UsageError("ATSPInstance: need at least two cities");
  if (cost.size() != n * n)
    throw UsageError("ATSPInstance: matrix size does not match N");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && !(cost[i * n + j] >= 0 && is_finite(cost[i * n + j])))
        throw UsageError("ATSPInstance: off-diagonal entry (" + std::to_string(i + 1) + "," +
                         std::to_string(j + 1) + ") must be finite and nonnegative");
}

std::string Tour::to_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < cities.size(); ++i)
    s += (i ? "," : "") + std::to_string(cities[i] + 1);
  return s + ")";
}

void validate_tour(const Tour& t, std::size_t n) {
  if (n < 2 || t.cities.size() != n + 1 || t.cities.front() != 0 || t.cities.back() != 0)
    throw UsageError("invalid tour " + t.to_string() + " for " + std::to_string(n) + " cities");
  std::vector<char> seen(n, 0);
  for (std::size_t i = 1; i < n; ++i) {
    const auto c = t.cities[i];
    if (c == 0 || c >= n || seen[c])
      throw UsageError("invalid tour " + t.to_string() + ": not a permutation");
    seen[c] = 1;
  }
}

Tour tour_from_labels(const std::vector<std::size_t>& labels) {
  Tour t;
  for (auto l : labels) {
    if (l == 0)
      throw UsageError("tour labels are 1-based");
    t.cities.push_back(l - 1);
  }
  validate_tour(t, t.num_cities());
  return t;
}

Cost tour_cost(const ATSPInstance& inst, const Tour& t) {
  validate_tour(t, inst.n);
  Cost sum = 0;
  for (std::size_t i = 0; i + 1 < t.cities.size(); ++i)
    sum = add_cost(sum, inst(t.cities[i], t.cities[i + 1]));
  return sum;
}

Tour solve_exact(const ATSPInstance& inst) {
  inst.validate();
  const std::size_t n = inst.n;
  if (n > kMaxExactCities)
    throw CapacityError("solve_exact: " + std::to_string(n) + " cities exceed the exact limit of " +
                        std::to_string(kMaxExactCities) + "; use the heuristic backend");
  /* dp[S][j]: cheapest path from the depot through the set S of cities 1..n-1 ending in j in S */
  const std::size_t k = n - 1;
  const std::size_t full = (std::size_t{1} << k) - 1;
  std::vector<Cost> dp((full + 1) * k, kInfinity);
  std::vector<std::uint8_t> parent((full + 1) * k, 0);
  for (std::size_t j = 0; j < k; ++j)
    dp[(std::size_t{1} << j) * k + j] = inst(0, j + 1);
  for (std::size_t S = 1; S <= full; ++S)
    for (std::size_t j = 0; j < k; ++j) {
      if (!(S >> j & 1))
        continue;
      const Cost base = dp[S * k + j];
      if (!is_finite(base))
        continue;
      for (std::size_t l = 0; l < k; ++l) {
        if (S >> l & 1)
          continue;
        const std::size_t T = S | (std::size_t{1} << l);
        const Cost c = base + inst(j + 1, l + 1);
        if (c < dp[T * k + l]) {
          dp[T * k + l] = c;
          parent[T * k + l] = static_cast<std::uint8_t>(j);
        }
      }
    }
  Cost best = kInfinity;
  std::size_t last = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const Cost c = dp[full * k + j] + inst(j + 1, 0);
    if (c < best) {
      best = c;
      last = j;
    }
  }
  std::vector<std::size_t> rev;
  std::size_t S = full, j = last;
  while (S) {
    rev.push_back(j + 1);
    const std::size_t pj = parent[S * k + j];
    S &= ~(std::size_t{1} << j);
    j = pj;
  }
  Tour t;
  t.cities.push_back(0);
  t.cities.insert(t.cities.end(), rev.rbegin(), rev.rend());
  t.cities.push_back(0);
  return t;
}

Tour nearest_neighbor_tour(const ATSPInstance& inst) {
  inst.validate();
  const std::size_t n = inst.n;
  std::vector<char> used(n, 0);
  used[0] = 1;
  Tour t;
  t.cities.push_back(0);
  std::size_t cur = 0;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t j = 1; j < n; ++j)
      if (!used[j] && (next == n || inst(cur, j) < inst(cur, next)))
        next = j;
    used[next] = 1;
    t.cities.push_back(next);
    cur = next;
  }
  t.cities.push_back(0);
  return t;
}

namespace {

/* cost of walking seq[a..b] backwards, i.e. sum C(seq[i+1], seq[i]) for a <= i < b */
Cost reversed_inner(const ATSPInstance& inst, const std::vector<std::size_t>& s, std::size_t a, std::size_t b) {
  Cost c = 0;
  for (std::size_t i = a; i < b; ++i)
    c += inst(s[i + 1], s[i]);
  return c;
}

Cost forward_inner(const ATSPInstance& inst, const std::vector<std::size_t>& s, std::size_t a, std::size_t b) {
  Cost c = 0;
  for (std::size_t i = a; i < b; ++i)
    c += inst(s[i], s[i + 1]);
  return c;
}

constexpr double kGain = 1e-10;

/* first-improvement 2-opt on the open sequence s[0..n] with fixed endpoints */
bool two_opt_pass(const ATSPInstance& inst, std::vector<std::size_t>& s) {
  const std::size_t n = s.size() - 1;
  for (std::size_t i = 1; i + 1 < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const Cost before = inst(s[i - 1], s[i]) + forward_inner(inst, s, i, j) + inst(s[j], s[j + 1]);
      const Cost after = inst(s[i - 1], s[j]) + reversed_inner(inst, s, i, j) + inst(s[i], s[j + 1]);
      if (after < before - kGain) {
        std::reverse(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(j) + 1);
        return true;
      }
    }
  return false;
}

/* first-improvement Or-opt: move a segment of 1..3 cities elsewhere keeping its direction */
bool or_opt_pass(const ATSPInstance& inst, std::vector<std::size_t>& s) {
  const std::size_t n = s.size() - 1;
  for (std::size_t len = 1; len <= 3; ++len)
    for (std::size_t i = 1; i + len <= n; ++i) {
      const std::size_t e = i + len - 1;  // segment s[i..e]
      if (e >= n)
        break;
      const Cost removal = inst(s[i - 1], s[i]) + inst(s[e], s[e + 1]) - inst(s[i - 1], s[e + 1]);
      /* insert between s[k] and s[k+1], outside the segment */
      for (std::size_t k = 0; k < n; ++k) {
        if (k + 1 >= i && k <= e)
          continue;
        const Cost insertion = inst(s[k], s[i]) + inst(s[e], s[k + 1]) - inst(s[k], s[k + 1]);
        if (insertion < removal - kGain) {
          std::vector<std::size_t> seg(s.begin() + static_cast<std::ptrdiff_t>(i),
                                       s.begin() + static_cast<std::ptrdiff_t>(e) + 1);
          std::vector<std::size_t> out;
          out.reserve(s.size());
          for (std::size_t q = 0; q <= n; ++q) {
            if (q >= i && q <= e)
              continue;
            out.push_back(s[q]);
            if (q == k)
              out.insert(out.end(), seg.begin(), seg.end());
          }
          s = std::move(out);
          return true;
        }
      }
    }
  return false;
}

void local_search(const ATSPInstance& inst, std::vector<std::size_t>& s) {
  while (two_opt_pass(inst, s) || or_opt_pass(inst, s)) {
  }
}

Cost sequence_cost(const ATSPInstance& inst, const std::vector<std::size_t>& s) {
  return forward_inner(inst, s, 0, s.size() - 1);
}

}  // namespace

Tour solve_heuristic(const ATSPInstance& inst, std::uint64_t seed) {
  Tour best = nearest_neighbor_tour(inst);
  const std::size_t n = inst.n;
  if (n <= 3) {
    /* at most two tours: compare directly */
    if (n == 3) {
      Tour other{{0, best.cities[2], best.cities[1], 0}};
      if (tour_cost(inst, other) < tour_cost(inst, best) - kGain)
        best = other;
    }
    return best;
  }
  local_search(inst, best.cities);
  Cost best_cost = sequence_cost(inst, best.cities);
  if (n < 5)
    return best;  // double bridge needs three distinct cut points

  std::mt19937_64 rng(seed);
  const std::size_t kicks = std::max<std::size_t>(50, 10 * n);
  for (std::size_t it = 0; it < kicks; ++it) {
    /* double bridge on the inner cities 1..n-1: A B C D -> A C B D */
    std::vector<std::size_t> cut(3);
    const std::size_t inner = n - 1;
    do {
      for (auto& c : cut)
        c = 1 + rng() % (inner - 1);
      std::sort(cut.begin(), cut.end());
    } while (cut[0] == cut[1] || cut[1] == cut[2]);
    const auto& s = best.cities;
    std::vector<std::size_t> t;
    t.reserve(s.size());
    auto append = [&](std::size_t a, std::size_t b) {
      t.insert(t.end(), s.begin() + static_cast<std::ptrdiff_t>(a), s.begin() + static_cast<std::ptrdiff_t>(b));
    };
    append(0, cut[0] + 1);
    append(cut[1] + 1, cut[2] + 1);
    append(cut[0] + 1, cut[1] + 1);
    append(cut[2] + 1, s.size());
    local_search(inst, t);
    const Cost c = sequence_cost(inst, t);
    if (c < best_cost - kGain) {
      best.cities = std::move(t);
      best_cost = c;
    }
  }
  return best;
}

void write_tsplib(std::ostream& out, const ATSPInstance& inst, const TsplibOptions& opt) {
  inst.validate();
  out << "NAME: " << opt.name << "\n"
      << "TYPE: ATSP\n"
      << "DIMENSION: " << inst.n << "\n"
      << "EDGE_WEIGHT_TYPE: EXPLICIT\n"
      << "EDGE_WEIGHT_FORMAT: FULL_MATRIX\n"
      << "EDGE_WEIGHT_SECTION\n";
  for (std::size_t i = 0; i < inst.n; ++i) {
    for (std::size_t j = 0; j < inst.n; ++j) {
      const std::int64_t w = i == j ? opt.diagonal : std::llround(inst(i, j) * opt.scale);
      out << (j ? " " : "") << w;
    }
    out << "\n";
  }
  out << "EOF\n";
}

void export_tsplib(const ATSPInstance& inst, const std::string& path, const TsplibOptions& opt) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write TSPLIB file '" + path + "'");
  write_tsplib(out, inst, opt);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/* splits "KEY : VALUE" */
bool keyword(const std::string& line, std::string& key, std::string& value) {
  const auto colon = line.find(':');
  if (colon == std::string::npos) {
    key = trim(line);
    value.clear();
    return false;
  }
  key = trim(line.substr(0, colon));
  value = trim(line.substr(colon + 1));
  return true;
}

}  // namespace

ATSPInstance read_tsplib(std::istream& in, double scale) {
  std::string line, key, value;
  std::size_t lineno = 0, n = 0;
  bool explicit_full = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty())
      continue;
    keyword(line, key, value);
    if (key == "DIMENSION") {
      try {
        n = std::stoul(value);
      } catch (const std::exception&) {
        throw ParseError("TSPLIB: bad DIMENSION", lineno);
      }
    } else if (key == "TYPE" && value != "ATSP" && value != "TSP") {
      throw ParseError("TSPLIB: unsupported TYPE '" + value + "'", lineno);
    } else if (key == "EDGE_WEIGHT_FORMAT") {
      if (value != "FULL_MATRIX")
        throw ParseError("TSPLIB: only FULL_MATRIX is supported", lineno);
      explicit_full = true;
    } else if (key == "EDGE_WEIGHT_SECTION") {
      if (n < 2)
        throw ParseError("TSPLIB: DIMENSION missing before EDGE_WEIGHT_SECTION", lineno);
      if (!explicit_full)
        throw ParseError("TSPLIB: EDGE_WEIGHT_FORMAT: FULL_MATRIX required", lineno);
      std::vector<Cost> c;
      c.reserve(n * n);
      while (c.size() < n * n && std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tok;
        while (ls >> tok) {
          try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size())
              throw std::invalid_argument(tok);
            c.push_back(v / scale);
          } catch (const std::exception&) {
            throw ParseError("TSPLIB: bad weight '" + tok + "'", lineno);
          }
        }
      }
      if (c.size() != n * n)
        throw ParseError("TSPLIB: EDGE_WEIGHT_SECTION has " + std::to_string(c.size()) + " of " +
                             std::to_string(n * n) + " weights",
                         lineno);
      for (std::size_t i = 0; i < n; ++i)
        c[i * n + i] = 0;
      return ATSPInstance(n, std::move(c));
    }
  }
  throw ParseError("TSPLIB: no EDGE_WEIGHT_SECTION", lineno);
}

ATSPInstance import_tsplib(const std::string& path, double scale) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open TSPLIB file '" + path + "'");
  return read_tsplib(in, scale);
}

Tour read_tour(std::istream& in) {
  std::string line, key, value;
  std::size_t lineno = 0, dimension = 0;
  bool in_section = false, terminated = false;
  std::vector<std::size_t> order;
  while (!terminated && std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty())
      continue;
    if (!in_section) {
      keyword(t, key, value);
      if (key == "DIMENSION") {
        try {
          dimension = std::stoul(value);
        } catch (const std::exception&) {
          throw ParseError("tour file: bad DIMENSION", lineno);
        }
      } else if (key == "TOUR_SECTION") {
        in_section = true;
      } else if (key == "EOF") {
        break;
      }
      continue;
    }
    std::istringstream ls(t);
    std::string tok;
    while (ls >> tok) {
      long long v;
      try {
        std::size_t used = 0;
        v = std::stoll(tok, &used);
        if (used != tok.size())
          throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("tour file: bad city '" + tok + "'", lineno);
      }
      if (v == -1) {
        terminated = true;
        break;
      }
      if (v < 1)
        throw ParseError("tour file: city labels must be positive", lineno);
      order.push_back(static_cast<std::size_t>(v));
    }
  }
  if (!in_section)
    throw ParseError("tour file: no TOUR_SECTION", lineno);
  if (!terminated)
    throw ParseError("tour file: missing -1 terminator", lineno);
  const std::size_t n = order.size();
  if (dimension && dimension != n)
    throw ParseError("tour file: DIMENSION " + std::to_string(dimension) + " but " + std::to_string(n) +
                         " cities listed",
                     lineno);
  std::vector<char> seen(n + 1, 0);
  for (auto c : order) {
    if (c > n || seen[c])
      throw ParseError("tour file: TOUR_SECTION is not a permutation of 1.." + std::to_string(n), lineno);
    seen[c] = 1;
  }
  if (n < 2)
    throw ParseError("tour file: need at least two cities", lineno);
  const auto depot = std::find(order.begin(), order.end(), std::size_t{1});
  std::rotate(order.begin(), depot, order.end());
  order.push_back(1);
  return tour_from_labels(order);
}

Tour import_tour(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open tour file '" + path + "'");
  return read_tour(in);
}

void write_tour(std::ostream& out, const Tour& t, const std::string& name) {
  out << "NAME: " << name << "\nTYPE: TOUR\nDIMENSION: " << t.num_cities() << "\nTOUR_SECTION\n";
  for (std::size_t i = 0; i + 1 < t.cities.size(); ++i)
    out << t.label(i) << "\n";
  out << "-1\nEOF\n";
}

Tour solve_external(const ATSPInstance& inst, const std::string& solver, const std::string& work_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(work_dir);
  const fs::path problem = fs::path(work_dir) / "cost_matrix.atsp";
  const fs::path params = fs::path(work_dir) / "solver.par";
  const fs::path tour = fs::path(work_dir) / "solver.tour";
  export_tsplib(inst, problem.string());
  {
    std::ofstream par(params);
    par << "PROBLEM_FILE = " << problem.string() << "\nTOUR_FILE = " << tour.string() << "\nRUNS = 1\n";
  }
  std::error_code ec;
  fs::remove(tour, ec);
  const std::string cmd = "\"" + solver + "\" \"" + params.string() + "\" > \"" +
                          (fs::path(work_dir) / "solver.log").string() + "\" 2>&1";
  const int rc = std::system(cmd.c_str());
  if (rc != 0)
    throw std::runtime_error("external TSP solver '" + solver + "' failed with status " + std::to_string(rc));
  Tour t = import_tour(tour.string());
  validate_tour(t, inst.n);
  return t;
}

}  // namespace dtsp
