#pragma once

// Calendar-derived earnings features for the 4-input shape network.

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "synthvol/dates.hpp"

namespace synthvol::surface {

struct SectorInfo {
  std::string sector;
  bool is_etf = false;
};

using SectorMap = std::map<std::string, SectorInfo>;
/// Print dates per ticker, sorted ascending.
using EarningsCalendar = std::map<std::string, std::vector<dates::Date>>;

struct EarningsFeatures {
  double e = 30.0;       // signed days to the nearest own print, clipped to [-30, 30]
  double e_peer = 30.0;  // min |days| over same-sector equity peers, clipped to 30
  // Unclipped distances; +inf when there is nothing to measure against.
  double own_distance = std::numeric_limits<double>::infinity();
  double peer_distance = std::numeric_limits<double>::infinity();
};

/// Signed calendar days from `obs` to the nearest print (ties go to the
/// future print); nullopt-like +inf result when `prints` is empty.
double nearest_print(const std::vector<dates::Date>& prints, dates::Date obs);

/// Tickers that are ETFs or absent from the calendar take e from the nearest
/// print across all equities. An empty calendar yields 30 / 30 and, when
/// `warnings` is given, a message.
EarningsFeatures earnings_features(const std::string& ticker, dates::Date obs, const EarningsCalendar& calendar,
                                   const SectorMap& sectors, std::vector<std::string>* warnings = nullptr);

}  // namespace synthvol::surface
