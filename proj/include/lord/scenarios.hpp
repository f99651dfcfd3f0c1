#pragma once

// Dose-response presets: four CR parameter sets over a nine-dose grid on
// the log scale (0.3 mg to 320 mg).

#include <optional>
#include <string_view>
#include <vector>

#include "lord/cr_model.hpp"

namespace lord::scenarios {

inline const std::vector<double>& standard_grid() {
  static const std::vector<double> x{-1.20, -0.23, 0.92, 2.02, 3.00,
                                     3.69,  4.38,  5.08, 5.77};
  return x;
}

inline constexpr double kGamma = 0.2;
inline constexpr double kDelta = 0.2;

/// Narrow therapeutic window.
inline constexpr ThetaParams A{0.855, 0.566, -5.768, 1.0};
/// Wide therapeutic window.
inline constexpr ThetaParams B{2.017, 2.827, -11.537, 2.0};
/// All studied doses safe.
inline constexpr ThetaParams C{-3.539, 1.124, -26.618, 3.674};
/// Toxicity rising at very low doses.
inline constexpr ThetaParams D{1.437, 0.125, -1.525, 1.227};

inline std::optional<ThetaParams> preset(std::string_view name) {
  if (name == "A") return A;
  if (name == "B") return B;
  if (name == "C") return C;
  if (name == "D") return D;
  return std::nullopt;
}

inline DoseGrid grid() { return {standard_grid()}; }
inline DoseInterval interval() { return {standard_grid().front(), standard_grid().back()}; }

}  // namespace lord::scenarios
