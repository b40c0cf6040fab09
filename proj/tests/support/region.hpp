#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stencilgrad/adjoint.hpp"

namespace testsupport {

struct RegionCheck {
  bool disjoint = true;
  bool exact = true;  // every point executes exactly the statements valid there
  std::string detail;
};

/// Brute-force oracle: rasterizes every generated nest over the integer
/// write region and checks that (a) no point belongs to two nests and
/// (b) each point executes exactly the set of shifted statements whose
/// valid space [s+o, e+o] contains it.
inline RegionCheck raster_check(const stencilgrad::AdjointProgram& prog,
                                const stencilgrad::StencilLoopNest& primal,
                                const std::map<std::string, long long>& sizes) {
  namespace sg = stencilgrad;
  RegionCheck rc;
  const std::size_t d = primal.counters.size();
  const std::size_t m = prog.shifted.size();
  if (m == 0 || m > 32) {
    rc.detail = "statement count out of raster range";
    rc.disjoint = rc.exact = m == 0;
    return rc;
  }

  std::vector<long long> s(d), e(d), lo(d), hi(d);
  for (std::size_t i = 0; i < d; i++) {
    s[i] = primal.bounds[i].lo.eval(sizes);
    e[i] = primal.bounds[i].hi.eval(sizes);
    long long min_o = prog.shifted[0].offset[i], max_o = min_o;
    for (const auto& st : prog.shifted) {
      min_o = std::min(min_o, st.offset[i]);
      max_o = std::max(max_o, st.offset[i]);
    }
    lo[i] = s[i] + min_o;
    hi[i] = e[i] + max_o;
    if (lo[i] > hi[i]) {
      rc.detail = "empty region";
      return rc;
    }
  }

  std::size_t total = 1;
  for (std::size_t i = 0; i < d; i++) total *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  std::vector<std::uint32_t> mask(total, 0);
  std::vector<bool> visited(total, false);

  auto flat = [&](const std::vector<long long>& pt) {
    std::size_t off = 0;
    for (std::size_t i = 0; i < d; i++)
      off = off * static_cast<std::size_t>(hi[i] - lo[i] + 1) +
            static_cast<std::size_t>(pt[i] - lo[i]);
    return off;
  };

  for (const auto& nest : prog.nests) {
    std::vector<long long> blo(d), bhi(d);
    bool empty = false;
    for (std::size_t i = 0; i < d; i++) {
      blo[i] = nest.nest.bounds[i].lo.eval(sizes);
      bhi[i] = nest.nest.bounds[i].hi.eval(sizes);
      if (blo[i] > bhi[i]) empty = true;
    }
    if (empty) continue;
    std::uint32_t bits = 0;
    for (std::size_t t : nest.terms) bits |= 1u << t;
    std::vector<long long> pt = blo;
    while (true) {
      std::size_t off = flat(pt);
      if (visited[off]) {
        rc.disjoint = false;
        rc.detail = "point covered by two nests";
      }
      visited[off] = true;
      mask[off] = bits;
      std::size_t i = d;
      bool done = false;
      while (i > 0) {
        i--;
        if (++pt[i] <= bhi[i]) break;
        pt[i] = blo[i];
        if (i == 0) done = true;
      }
      if (done) break;
    }
  }

  std::vector<long long> pt = lo;
  while (true) {
    std::uint32_t expected = 0;
    for (std::size_t t = 0; t < m; t++) {
      bool valid = true;
      for (std::size_t i = 0; i < d; i++) {
        long long v = pt[i] - prog.shifted[t].offset[i];
        if (v < s[i] || v > e[i]) valid = false;
      }
      if (valid) expected |= 1u << t;
    }
    if (mask[flat(pt)] != expected) {
      rc.exact = false;
      rc.detail = "statement set mismatch at a region point";
      return rc;
    }
    std::size_t i = d;
    bool done = false;
    while (i > 0) {
      i--;
      if (++pt[i] <= hi[i]) break;
      pt[i] = lo[i];
      if (i == 0) done = true;
    }
    if (done) break;
  }
  return rc;
}

}  // namespace testsupport
