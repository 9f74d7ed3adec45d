#pragma once

namespace broyden {

// Relative floor below which |y's| (and the other scalar denominators of an
// update) count as zero: |y's| <= kCurvatureFloor * ||y|| ||s||.
inline constexpr double kCurvatureFloor = 1e-12;

// A numeric phi closer than this (relative) to the SR1 value makes the 2x2
// update block singular; such steps must be marked SR1 explicitly.
inline constexpr double kSr1DetectTol = 1e-10;

// Relative drop tolerance of the pivoted Gram Cholesky in the spectral
// routines (applied to squared column norms).
inline constexpr double kRankDropTol = 1e-12;

// Small-matrix condition numbers above 1/kEpsFloor are treated as singular;
// a spectrum with min|lambda| <= kEpsFloor * max|lambda| has infinite
// condition number.
inline constexpr double kEpsFloor = 1e-14;

}  // namespace broyden
