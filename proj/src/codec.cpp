// SPDX-License-Identifier: Apache-2.0

#include "cfsim/codec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "cfsim/rng.hpp"

namespace cfsim {

namespace {

constexpr int kVarDegree = 3;
constexpr int kCheckDegree = 6;
constexpr double kClamp = 30.0;

double clamp30(double v) { return std::clamp(v, -kClamp, kClamp); }

/// True when adding edge (v, c) would double an edge or close a 4-cycle.
bool edge_conflict(const std::vector<std::vector<int>>& rows,
                   const std::vector<std::vector<int>>& cols, int v, int c) {
  for (int cc : cols[v])
    if (cc == c) return true;
  for (int w : rows[c]) {
    for (int cc : cols[w])
      for (int cv : cols[v])
        if (cc == cv) return true;
  }
  return false;
}

void remove_edge(std::vector<std::vector<int>>& rows,
                 std::vector<std::vector<int>>& cols, int v, int c) {
  rows[c].erase(std::find(rows[c].begin(), rows[c].end(), v));
  cols[v].erase(std::find(cols[v].begin(), cols[v].end(), c));
}

/// Endgame repair: the tail of a degree-capped construction can strand a
/// free slot inside v's 2-hop neighborhood. Re-home one existing edge
/// (u, c') so that u takes the free slot and v connects to c'.
bool swap_repair(std::vector<std::vector<int>>& rows,
                 std::vector<std::vector<int>>& cols, int v, int m) {
  for (int c_free = 0; c_free < m; ++c_free) {
    if (static_cast<int>(rows[c_free].size()) >= kCheckDegree) continue;
    for (int c_donor = 0; c_donor < m; ++c_donor) {
      if (c_donor == c_free) continue;
      for (std::size_t i = 0; i < rows[c_donor].size(); ++i) {
        int u = rows[c_donor][i];
        if (u == v) continue;
        remove_edge(rows, cols, u, c_donor);
        if (!edge_conflict(rows, cols, u, c_free) &&
            !edge_conflict(rows, cols, v, c_donor)) {
          rows[c_free].push_back(u);
          cols[u].push_back(c_free);
          rows[c_donor].push_back(v);
          cols[v].push_back(c_donor);
          return true;
        }
        rows[c_donor].insert(rows[c_donor].begin() + i, u);
        cols[u].push_back(c_donor);
      }
    }
  }
  return false;
}

/// One PEG attempt. Each variable gets kVarDegree edges; every edge goes to a
/// check with remaining capacity at maximal graph distance from the variable
/// (ties: lowest current degree, then a seed-fixed permutation order).
/// Returns false when a placement would close a 4-cycle or no capacity is
/// left.
bool peg_attempt(int n, int m, std::uint64_t seed,
                 std::vector<std::vector<int>>& rows,
                 std::vector<std::vector<int>>& cols) {
  rows.assign(m, {});
  cols.assign(n, {});
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  rng::Stream rng(seed);
  for (int i = m - 1; i > 0; --i)
    std::swap(order[i], order[rng.index(i + 1)]);
  std::vector<int> rank(m);
  for (int i = 0; i < m; ++i) rank[order[i]] = i;

  std::vector<int> dist(m);
  std::vector<int> var_seen(n);
  int stamp = 0;

  // Round-robin insertion (one edge per variable per round) keeps check
  // degrees balanced, so the degree cap stays satisfiable to the end.
  for (int e = 0; e < kVarDegree; ++e) {
    for (int v = 0; v < n; ++v) {
      // BFS over the bipartite graph from v; dist counts check-side hops.
      std::fill(dist.begin(), dist.end(), -1);
      ++stamp;
      std::queue<int> frontier;  // variable nodes
      var_seen[v] = stamp;
      frontier.push(v);
      int depth = 0;
      while (!frontier.empty() && depth < 6) {
        std::queue<int> next;
        while (!frontier.empty()) {
          int u = frontier.front();
          frontier.pop();
          for (int c : cols[u]) {
            if (dist[c] >= 0) continue;
            dist[c] = depth + 1;
            for (int w : rows[c]) {
              if (var_seen[w] != stamp) {
                var_seen[w] = stamp;
                next.push(w);
              }
            }
          }
        }
        frontier = std::move(next);
        depth += 2;
      }

      // dist 1: already adjacent (multi-edge); dist 3: closes a 4-cycle.
      int best = -1;
      bool best_unreached = false;
      for (int c = 0; c < m; ++c) {
        if (static_cast<int>(rows[c].size()) >= kCheckDegree) continue;
        if (dist[c] == 1 || dist[c] == 3) continue;
        bool unreached = dist[c] < 0;
        if (best < 0) {
          best = c;
          best_unreached = unreached;
          continue;
        }
        // Prefer unreached checks (maximal distance), then lowest degree,
        // then the permutation order.
        if (unreached != best_unreached) {
          if (unreached) {
            best = c;
            best_unreached = true;
          }
          continue;
        }
        if (!unreached && dist[c] != dist[best]) {
          if (dist[c] > dist[best]) best = c;
          continue;
        }
        if (rows[c].size() != rows[best].size()) {
          if (rows[c].size() < rows[best].size()) best = c;
          continue;
        }
        if (rank[c] < rank[best]) best = c;
      }
      if (best < 0) {
        if (!swap_repair(rows, cols, v, m)) return false;
        continue;
      }
      rows[best].push_back(v);
      cols[v].push_back(best);
    }
  }
  return true;
}

/// GF(2) elimination of H. On success fills the systematic split and the
/// packed parity generator; returns false when H is rank deficient.
bool build_encoder(LdpcCode& code) {
  const int n = code.n;
  const int m = code.n_checks;
  const int words = (n + 63) / 64;
  std::vector<std::vector<std::uint64_t>> h(m,
                                            std::vector<std::uint64_t>(words, 0));
  for (int r = 0; r < m; ++r)
    for (int c : code.rows[r]) h[r][c >> 6] |= 1ULL << (c & 63);

  auto get = [&](const std::vector<std::uint64_t>& row, int c) {
    return (row[c >> 6] >> (c & 63)) & 1ULL;
  };

  std::vector<int> pivot_col(m, -1);
  int rank = 0;
  for (int col = 0; col < n && rank < m; ++col) {
    int pivot = -1;
    for (int r = rank; r < m; ++r) {
      if (get(h[r], col)) {
        pivot = r;
        break;
      }
    }
    if (pivot < 0) continue;
    std::swap(h[rank], h[pivot]);
    for (int r = 0; r < m; ++r) {
      if (r != rank && get(h[r], col)) {
        for (int w = 0; w < words; ++w) h[r][w] ^= h[rank][w];
      }
    }
    pivot_col[rank] = col;
    ++rank;
  }
  if (rank < m) return false;

  std::vector<bool> is_parity(n, false);
  code.parity_positions.assign(pivot_col.begin(), pivot_col.end());
  for (int c : code.parity_positions) is_parity[c] = true;
  code.info_positions.clear();
  for (int c = 0; c < n; ++c)
    if (!is_parity[c]) code.info_positions.push_back(c);
  code.k_info = static_cast<int>(code.info_positions.size());

  // Row r of the reduced system reads: parity(pivot_col[r]) =
  // sum of info bits present in that row.
  const int kw = (code.k_info + 63) / 64;
  code.parity_table.assign(m, std::vector<std::uint64_t>(kw, 0));
  for (int r = 0; r < m; ++r) {
    for (int j = 0; j < code.k_info; ++j) {
      if (get(h[r], code.info_positions[j]))
        code.parity_table[r][j >> 6] |= 1ULL << (j & 63);
    }
  }
  return true;
}

bool has_four_cycle(const std::vector<std::vector<int>>& cols, int m) {
  // Two variables sharing two checks form a 4-cycle.
  std::vector<std::vector<int>> pair_seen(m);
  for (std::size_t v = 0; v < cols.size(); ++v) {
    const auto& cs = cols[v];
    for (std::size_t a = 0; a < cs.size(); ++a)
      for (std::size_t b = a + 1; b < cs.size(); ++b) {
        int lo = std::min(cs[a], cs[b]);
        int hi = std::max(cs[a], cs[b]);
        auto& seen = pair_seen[lo];
        if (std::find(seen.begin(), seen.end(), hi) != seen.end()) return true;
        seen.push_back(hi);
      }
  }
  return false;
}

/// Pairwise exact check-node combine of two LLRs (L = log p1/p0 convention):
/// -2 atanh(tanh(a/2) tanh(b/2)), evaluated in sign/magnitude form.
double boxplus(double a, double b) {
  double sign = ((a < 0) != (b < 0)) ? -1.0 : 1.0;
  double base = sign * std::min(std::fabs(a), std::fabs(b));
  double corr = std::log1p(std::exp(-std::fabs(a + b))) -
                std::log1p(std::exp(-std::fabs(a - b)));
  return -(base + corr);
}

}  // namespace

LdpcCode build_code(int n, std::uint64_t seed) {
  if (n <= 0 || n % 2 != 0) throw std::invalid_argument("n must be even and positive");
  const int m = n / 2;
  LdpcCode code;
  code.n = n;
  code.n_checks = m;

  for (int attempt = 0; attempt < 100; ++attempt) {
    std::uint64_t s = seed + attempt;
    if (!peg_attempt(n, m, s, code.rows, code.cols)) continue;
    if (has_four_cycle(code.cols, m)) continue;
    if (!build_encoder(code)) continue;
    return code;
  }
  throw std::runtime_error("LDPC construction failed after 100 attempts");
}

std::vector<std::uint8_t> encode(const LdpcCode& code,
                                 const std::vector<std::uint8_t>& info_bits) {
  if (static_cast<int>(info_bits.size()) != code.k_info)
    throw std::invalid_argument("info length mismatch");
  const int kw = (code.k_info + 63) / 64;
  std::vector<std::uint64_t> packed(kw, 0);
  for (int j = 0; j < code.k_info; ++j)
    if (info_bits[j]) packed[j >> 6] |= 1ULL << (j & 63);

  std::vector<std::uint8_t> cw(code.n, 0);
  for (int j = 0; j < code.k_info; ++j) cw[code.info_positions[j]] = info_bits[j];
  for (int r = 0; r < code.n_checks; ++r) {
    std::uint64_t acc = 0;
    for (int w = 0; w < kw; ++w) acc ^= code.parity_table[r][w] & packed[w];
    cw[code.parity_positions[r]] =
        static_cast<std::uint8_t>(__builtin_popcountll(acc) & 1);
  }
  return cw;
}

bool syndrome_ok(const LdpcCode& code, const std::vector<std::uint8_t>& bits) {
  for (const auto& row : code.rows) {
    int parity = 0;
    for (int c : row) parity ^= bits[c];
    if (parity) return false;
  }
  return true;
}

DecodeResult decode(const LdpcCode& code, const VecD& channel_llrs,
                    int max_inner) {
  if (channel_llrs.size() != code.n)
    throw std::invalid_argument("channel LLR length mismatch");
  const int n = code.n;

  VecD in(n);
  for (int i = 0; i < n; ++i) in(i) = clamp30(channel_llrs(i));

  DecodeResult res;
  res.hard.resize(n);
  auto harden = [&](const VecD& llr) {
    for (int i = 0; i < n; ++i) res.hard[i] = llr(i) > 0.0 ? 1 : 0;
  };

  harden(in);
  if (syndrome_ok(code, res.hard)) {
    res.posterior = in;
    res.extrinsic = VecD::Zero(n);
    res.converged = true;
    res.iterations = 0;
    return res;
  }

  // Edge-indexed messages, edges enumerated row by row.
  int n_edges = 0;
  for (const auto& row : code.rows) n_edges += static_cast<int>(row.size());
  std::vector<int> edge_bit(n_edges);
  std::vector<std::vector<int>> bit_edges(n);
  {
    int e = 0;
    for (const auto& row : code.rows)
      for (int c : row) {
        edge_bit[e] = c;
        bit_edges[c].push_back(e);
        ++e;
      }
  }

  std::vector<double> v2c(n_edges), c2v(n_edges, 0.0);
  for (int e = 0; e < n_edges; ++e) v2c[e] = in(edge_bit[e]);

  VecD posterior = in;
  VecD extrinsic = VecD::Zero(n);
  std::vector<double> fwd, bwd;
  res.converged = false;

  for (int iter = 1; iter <= max_inner; ++iter) {
    // Check-node update, forward/backward over each row.
    int base = 0;
    for (const auto& row : code.rows) {
      const int deg = static_cast<int>(row.size());
      if (deg == 1) {
        c2v[base] = -kClamp;  // a lone bit in a check must be zero
        base += 1;
        continue;
      }
      fwd.assign(deg, 0.0);
      bwd.assign(deg, 0.0);
      fwd[0] = v2c[base];
      bwd[deg - 1] = v2c[base + deg - 1];
      for (int j = 1; j < deg; ++j) {
        fwd[j] = boxplus(fwd[j - 1], v2c[base + j]);
        bwd[deg - 1 - j] = boxplus(bwd[deg - j], v2c[base + deg - 1 - j]);
      }
      c2v[base] = bwd[1];
      c2v[base + deg - 1] = fwd[deg - 2];
      for (int j = 1; j < deg - 1; ++j)
        c2v[base + j] = boxplus(fwd[j - 1], bwd[j + 1]);
      base += deg;
    }

    // Variable-node update; the posterior is formed as input + extrinsic so
    // the extrinsic identity holds to the last bit.
    for (int b = 0; b < n; ++b) {
      double ext = 0.0;
      for (int e : bit_edges[b]) ext += c2v[e];
      extrinsic(b) = ext;
      posterior(b) = in(b) + ext;
      for (int e : bit_edges[b]) v2c[e] = posterior(b) - c2v[e];
    }

    harden(posterior);
    res.iterations = iter;
    if (syndrome_ok(code, res.hard)) {
      res.converged = true;
      break;
    }
  }

  res.posterior = posterior;
  res.extrinsic = extrinsic;
  return res;
}

void write_alist(const LdpcCode& code, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  int max_col = 0, max_row = 0;
  for (const auto& c : code.cols) max_col = std::max<int>(max_col, c.size());
  for (const auto& r : code.rows) max_row = std::max<int>(max_row, r.size());
  f << code.n << ' ' << code.n_checks << '\n';
  f << max_col << ' ' << max_row << '\n';
  for (std::size_t i = 0; i < code.cols.size(); ++i)
    f << code.cols[i].size() << (i + 1 < code.cols.size() ? ' ' : '\n');
  for (std::size_t i = 0; i < code.rows.size(); ++i)
    f << code.rows[i].size() << (i + 1 < code.rows.size() ? ' ' : '\n');
  // 1-based indices, zero-padded to the maximum degree.
  for (const auto& c : code.cols) {
    for (int i = 0; i < max_col; ++i)
      f << (i < static_cast<int>(c.size()) ? c[i] + 1 : 0)
        << (i + 1 < max_col ? ' ' : '\n');
  }
  for (const auto& r : code.rows) {
    for (int i = 0; i < max_row; ++i)
      f << (i < static_cast<int>(r.size()) ? r[i] + 1 : 0)
        << (i + 1 < max_row ? ' ' : '\n');
  }
}

LdpcCode read_alist(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  LdpcCode code;
  int max_col, max_row;
  f >> code.n >> code.n_checks >> max_col >> max_row;
  std::vector<int> col_deg(code.n), row_deg(code.n_checks);
  for (auto& d : col_deg) f >> d;
  for (auto& d : row_deg) f >> d;
  code.cols.assign(code.n, {});
  code.rows.assign(code.n_checks, {});
  for (int v = 0; v < code.n; ++v) {
    for (int i = 0; i < max_col; ++i) {
      int c;
      f >> c;
      if (c > 0 && i < col_deg[v]) code.cols[v].push_back(c - 1);
    }
  }
  for (int r = 0; r < code.n_checks; ++r) {
    for (int i = 0; i < max_row; ++i) {
      int v;
      f >> v;
      if (v > 0 && i < row_deg[r]) code.rows[r].push_back(v - 1);
    }
  }
  if (!f) throw std::runtime_error("malformed alist file " + path);
  if (!build_encoder(code))
    throw std::runtime_error("alist matrix is rank deficient");
  return code;
}

cplx qpsk_map(int b1, int b2) {
  return {b1 ? kQpskAmp : -kQpskAmp, b2 ? kQpskAmp : -kQpskAmp};
}

cplx qpsk_point(int s) { return qpsk_map((s >> 1) & 1, s & 1); }

SoftSymbol qpsk_soft_symbol(double lc1, double lc2) {
  double re = kQpskAmp * std::tanh(clamp30(lc1) / 2.0);
  double im = kQpskAmp * std::tanh(clamp30(lc2) / 2.0);
  cplx mean(re, im);
  return {mean, 1.0 - std::norm(mean)};
}

std::vector<cplx> map_frame(const std::vector<std::uint8_t>& codeword) {
  if (codeword.size() % 2 != 0)
    throw std::invalid_argument("codeword length must be even");
  std::vector<cplx> symbols(codeword.size() / 2);
  for (std::size_t i = 0; i < symbols.size(); ++i)
    symbols[i] = qpsk_map(codeword[2 * i], codeword[2 * i + 1]);
  return symbols;
}

CodedFrame make_frame(const LdpcCode& code,
                      const std::vector<std::uint8_t>& info_bits) {
  CodedFrame fr;
  fr.info_bits = info_bits;
  fr.codeword = encode(code, info_bits);
  fr.symbols = map_frame(fr.codeword);
  fr.prior_llr = VecD::Zero(code.n);
  fr.extrinsic_llr = VecD::Zero(code.n);
  return fr;
}

}  // namespace cfsim
