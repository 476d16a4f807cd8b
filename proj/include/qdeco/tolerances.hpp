#pragma once

// Central numeric tolerances. Property tests reference these constants so a
// single change propagates everywhere.
namespace qdeco::tol {

inline constexpr double herm = 1e-12;     // max |A - A^dag| entrywise
inline constexpr double trace = 1e-12;    // |tr(rho) - 1|
inline constexpr double psd = 1e-10;      // eigenvalue floor: lam >= -psd
inline constexpr double unitary = 1e-12;  // max |U^dag U - I| entrywise
inline constexpr double norm = 1e-12;     // state normalization
inline constexpr double duration = 1e-12; // schedule time-budget residual

}
