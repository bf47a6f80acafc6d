// SPDX-License-Identifier: Apache-2.0
//
// Rate-1/2 LDPC coding and QPSK mapping for the per-user frame structure.
// LLR convention throughout: L = log P(b = 1) / P(b = 0).

#ifndef CFSIM_CODEC_HPP
#define CFSIM_CODEC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cfsim/types.hpp"

namespace cfsim {

/// Regular (3,6) parity-check code built by progressive edge growth.
/// Systematic: info bits occupy `info_positions` of the codeword.
struct LdpcCode {
  int n = 0;        // codeword length, bits
  int k_info = 0;   // information length
  int n_checks = 0;
  std::vector<std::vector<int>> rows;  // check -> bit adjacency
  std::vector<std::vector<int>> cols;  // bit -> check adjacency
  std::vector<int> info_positions;    // k_info slots carrying info bits
  std::vector<int> parity_positions;  // n - k_info slots
  // GF(2) encoding table: parity bit r = <parity_table[r], info bits>,
  // bit-packed in 64-bit words.
  std::vector<std::vector<std::uint64_t>> parity_table;

  double rate() const { return n ? static_cast<double>(k_info) / n : 0.0; }
};

/// Builds a rate-1/2 regular (3,6) code of length n (n even) with no
/// 4-cycles. Deterministic per seed; retries internally with incremented
/// seeds on a stuck edge placement or rank-deficient H and throws after 100
/// failed attempts.
LdpcCode build_code(int n, std::uint64_t seed);

/// Systematic encoding; H * c = 0 by construction.
std::vector<std::uint8_t> encode(const LdpcCode& code,
                                 const std::vector<std::uint8_t>& info_bits);

/// True when H * bits = 0 (mod 2).
bool syndrome_ok(const LdpcCode& code, const std::vector<std::uint8_t>& bits);

struct DecodeResult {
  VecD posterior;   // n
  VecD extrinsic;   // posterior - clamped channel input, exact
  std::vector<std::uint8_t> hard;  // sign decisions on posterior
  bool converged = false;
  int iterations = 0;
};

/// Log-domain sum-product decoding with early syndrome exit. Channel LLRs are
/// clamped to |L| <= 30 on entry; check messages are bounded by construction
/// so all outputs stay finite.
DecodeResult decode(const LdpcCode& code, const VecD& channel_llrs,
                    int max_inner = 20);

/// Parity-check matrix exchange in alist text format.
void write_alist(const LdpcCode& code, const std::string& path);
LdpcCode read_alist(const std::string& path);

// --- QPSK -------------------------------------------------------------
//
// Gray mapping: bit 1 sets the sign of the real axis (1 -> +), bit 2 the
// sign of the imaginary axis (1 -> +), amplitude sqrt(2)/2 per axis.
// Codeword bits (2i, 2i+1) form symbol i.

inline constexpr double kQpskAmp = 0.7071067811865475244;

cplx qpsk_map(int b1, int b2);

/// Constellation point for index s = 2*b1 + b2.
cplx qpsk_point(int s);

struct SoftSymbol {
  cplx mean;
  double variance;  // 1 - |mean|^2
};

/// Prior-weighted symbol mean/variance from the two bit LLRs.
SoftSymbol qpsk_soft_symbol(double lc1, double lc2);

/// Maps a codeword (length n, even) to n/2 unit-energy symbols.
std::vector<cplx> map_frame(const std::vector<std::uint8_t>& codeword);

/// One user's frame state through the detection/decoding exchange.
struct CodedFrame {
  std::vector<std::uint8_t> info_bits;
  std::vector<std::uint8_t> codeword;
  std::vector<cplx> symbols;
  VecD prior_llr;      // Lc, decoder extrinsic fed to the detector
  VecD extrinsic_llr;  // Lg, detector extrinsic fed to the decoder
  int iteration = 0;
};

CodedFrame make_frame(const LdpcCode& code,
                      const std::vector<std::uint8_t>& info_bits);

}  // namespace cfsim

#endif  // CFSIM_CODEC_HPP
