/*
 * atsp.hpp
 *
 * Classical asymmetric travelling salesman problems (N, C): exact Held-Karp,
 * a local-search heuristic and TSPLIB interop.
 */
#ifndef DTSP_ATSP_HPP_
#define DTSP_ATSP_HPP_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtsp/cost.hpp"

namespace dtsp {

/**
 * @brief N x N cost matrix, row-major; C(i,j) is the cost from city i to city j
 *
 * Cities are 0-based here; city 0 is the depot (printed as 1).
 **/
struct ATSPInstance {
  std::size_t n = 0;
  std::vector<Cost> cost;

  ATSPInstance() = default;
  ATSPInstance(std::size_t n, std::vector<Cost> cost);
  Cost operator()(std::size_t i, std::size_t j) const noexcept { return cost[i * n + j]; }
  /* throws UsageError unless n >= 2 and all off-diagonal entries are finite and >= 0 */
  void validate() const;
};

/* closed tour (0, t_2, ..., t_N, 0) */
struct Tour {
  std::vector<std::size_t> cities;

  std::size_t num_cities() const noexcept { return cities.empty() ? 0 : cities.size() - 1; }
  /* 1-based city label at position i (0-based) */
  std::size_t label(std::size_t i) const noexcept { return cities[i] + 1; }
  /* "(1,2,3,1)" */
  std::string to_string() const;
  friend bool operator==(const Tour&, const Tour&) = default;
};

/* builds a tour from 1-based labels, e.g. {1,2,3,1}; validates it */
Tour tour_from_labels(const std::vector<std::size_t>& labels);
/* throws UsageError unless t is a tour of length n */
void validate_tour(const Tour& t, std::size_t n);

Cost tour_cost(const ATSPInstance& inst, const Tour& t);

inline constexpr std::size_t kMaxExactCities = 16;

/* Held-Karp dynamic program; CapacityError for n > kMaxExactCities */
Tour solve_exact(const ATSPInstance& inst);

/**
 * @brief nearest neighbour from the depot, then 2-opt and Or-opt to a local optimum
 *
 * Afterwards a fixed number of seeded double-bridge perturbations are each
 * followed by local search; a perturbed tour replaces the incumbent only if
 * strictly cheaper. Deterministic for a fixed seed.
 */
Tour solve_heuristic(const ATSPInstance& inst, std::uint64_t seed = 1);

/* nearest-neighbour construction alone (lowest index on ties) */
Tour nearest_neighbor_tour(const ATSPInstance& inst);

struct TsplibOptions {
  double scale = 1e3;          // reals are multiplied and rounded to nearest integer
  std::int64_t diagonal = 1000000000;  // forbids self loops
  std::string name = "dtsp";
};

void write_tsplib(std::ostream& out, const ATSPInstance& inst, const TsplibOptions& opt = {});
void export_tsplib(const ATSPInstance& inst, const std::string& path, const TsplibOptions& opt = {});
/* reads an EXPLICIT FULL_MATRIX ATSP file; weights are divided by `scale` */
ATSPInstance read_tsplib(std::istream& in, double scale = 1.0);
ATSPInstance import_tsplib(const std::string& path, double scale = 1.0);

/* TOUR_SECTION file; the cyclic order is rotated to start at city 1. ParseError with line number */
Tour read_tour(std::istream& in);
Tour import_tour(const std::string& path);
void write_tour(std::ostream& out, const Tour& t, const std::string& name = "dtsp");

/* runs an external LKH-style solver binary on a temporary TSPLIB file */
Tour solve_external(const ATSPInstance& inst, const std::string& solver, const std::string& work_dir);

}  // namespace dtsp

#endif  // DTSP_ATSP_HPP_
