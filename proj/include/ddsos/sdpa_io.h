#pragma once

#include <iosfwd>
#include <string>

#include "ddsos/sdp.h"

namespace ddsos {

/// SDPA sparse ("dat-s") serialization.
///
/// SDPA's dual form is: maximize F0 . Y subject to Fi . Y = c_i, Y PSD. An
/// SdpProblem (minimize C . X subject to A_i . X = b_i) maps onto it with
/// F0 = -C, Fi = A_i, c = b.
///
/// Layout written, one item per line:
///   1. a comment line starting with '"'
///   2. m (number of constraints)
///   3. nBLOCK
///   4. block structure; diagonal blocks carry a negative size
///   5. c_1 ... c_m
///   6. entries "matno block row col value", 1-based, upper triangle,
///      ordered by (matno, block, row, col); matno 0 is F0.
/// Values use the shortest decimal form that round-trips exactly, so
/// write -> read -> write is byte-identical.
void WriteSdpa(const SdpProblem& prob, std::ostream& out);
std::string ToSdpaString(const SdpProblem& prob);

/// Reads dat-s text. Lines starting with '"' or '*' before the header are
/// comments; ',', '(', ')', '{', '}' are treated as blanks. Throws
/// std::invalid_argument on malformed input.
SdpProblem ReadSdpa(std::istream& in);
SdpProblem ParseSdpa(const std::string& text);

/// Sorted, duplicate-merged, zero-free copy of `prob` (the form ReadSdpa
/// returns).
SdpProblem Canonicalize(const SdpProblem& prob);

}  // namespace ddsos
