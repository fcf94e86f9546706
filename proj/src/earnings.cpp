#include "synthvol/earnings.hpp"

#include <algorithm>
#include <cmath>

namespace synthvol::surface {
namespace {

constexpr double kClip = 30.0;

bool is_etf(const std::string& ticker, const SectorMap& sectors) {
  const auto it = sectors.find(ticker);
  return it != sectors.end() && it->second.is_etf;
}

}  // namespace

double nearest_print(const std::vector<dates::Date>& prints, dates::Date obs) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto d : prints) {
    const double days = dates::calendar_days(obs, d);
    const double a = std::fabs(days);
    const double b = std::fabs(best);
    if (a < b || (a == b && days > best)) best = days;
  }
  return best;
}

EarningsFeatures earnings_features(const std::string& ticker, dates::Date obs, const EarningsCalendar& calendar,
                                   const SectorMap& sectors, std::vector<std::string>* warnings) {
  EarningsFeatures f;
  bool any = false;
  for (const auto& [t, prints] : calendar) any = any || !prints.empty();
  if (!any) {
    if (warnings) warnings->push_back("earnings calendar is empty; e and e_peer set to 30");
    return f;
  }

  const auto self = sectors.find(ticker);
  const std::string sector = self == sectors.end() ? std::string() : self->second.sector;

  double universe = std::numeric_limits<double>::infinity();
  for (const auto& [t, prints] : calendar) {
    if (t == ticker || is_etf(t, sectors) || prints.empty()) continue;
    const double d = std::fabs(nearest_print(prints, obs));
    universe = std::min(universe, d);
    const auto peer = sectors.find(t);
    if (!sector.empty() && peer != sectors.end() && peer->second.sector == sector) {
      f.peer_distance = std::min(f.peer_distance, d);
    }
  }
  f.e_peer = std::min(f.peer_distance, kClip);

  const auto own = calendar.find(ticker);
  const bool has_own = !is_etf(ticker, sectors) && own != calendar.end() && !own->second.empty();
  if (has_own) {
    const double d = nearest_print(own->second, obs);
    f.own_distance = std::fabs(d);
    f.e = std::clamp(d, -kClip, kClip);
  } else {
    f.e = std::min(universe, kClip);
  }
  return f;
}

}  // namespace synthvol::surface
