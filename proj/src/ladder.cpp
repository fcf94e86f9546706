#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/tokenizer.hpp>

#include "synthvol/calibration.hpp"

namespace synthvol::calibration {
namespace {

using Fields = std::vector<std::string>;

Fields split_csv(const std::string& line) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  Fields out;
  Tokenizer tok(line, boost::escaped_list_separator<char>('\\', ',', '"'));
  for (const auto& f : tok) out.push_back(boost::algorithm::trim_copy(f));
  return out;
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

// Column positions by header name; throws when a required name is absent.
std::map<std::string, std::size_t> header_index(const Fields& header, const std::vector<std::string>& required,
                                                const std::string& what) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string name = header[i];
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    idx.emplace(name, i);
  }
  std::string missing;
  for (const auto& r : required) {
    if (!idx.count(r)) missing += (missing.empty() ? "" : ", ") + r;
  }
  if (!missing.empty()) throw CalibrationError(what + " is missing required columns: " + missing);
  return idx;
}

double to_double(const std::string& s, const char* column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("bad number in ") + column);
  }
  if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(std::string("bad number in ") + column);
  return v;
}

bool to_bool(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "1" || t == "true" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "no" || t.empty()) return false;
  throw std::invalid_argument("bad boolean '" + s + "'");
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CalibrationError("cannot open '" + path + "'");
  return f;
}

}  // namespace

surface::SurfacePoint LadderObservation::point() const {
  return {static_cast<double>(dte), moneyness(), earnings.e, earnings.e_peer};
}

IngestResult read_ladder(std::istream& in, const surface::SectorMap& sectors) {
  IngestResult out;
  std::string line;
  if (!read_line(in, line)) return out;
  while (blank(line)) {
    if (!read_line(in, line)) return out;
  }
  const auto col = header_index(split_csv(line), {"ticker", "obs_date", "expiry", "strike", "parity", "bid", "ask", "iv", "spot"},
                                "ladder CSV");
  const std::size_t width = std::max_element(col.begin(), col.end(), [](auto& a, auto& b) { return a.second < b.second; })->second + 1;

  std::size_t line_no = 1;
  while (read_line(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    try {
      const Fields f = split_csv(line);
      if (f.size() < width) throw std::invalid_argument("expected at least " + std::to_string(width) + " fields");
      LadderObservation o;
      o.ticker = f[col.at("ticker")];
      if (o.ticker.empty()) throw std::invalid_argument("empty ticker");
      o.obs_date = dates::parse_iso(f[col.at("obs_date")]);
      o.expiry = dates::parse_iso(f[col.at("expiry")]);
      o.strike = to_double(f[col.at("strike")], "strike");
      o.parity = lattice::parse_parity(f[col.at("parity")]);
      o.bid = to_double(f[col.at("bid")], "bid");
      o.ask = to_double(f[col.at("ask")], "ask");
      o.iv = to_double(f[col.at("iv")], "iv");
      o.spot = to_double(f[col.at("spot")], "spot");
      if (!(o.strike > 0.0)) throw std::invalid_argument("strike must be positive");
      if (!(o.spot > 0.0)) throw std::invalid_argument("spot must be positive");
      if (o.bid < 0.0 || o.ask < 0.0) throw std::invalid_argument("negative quote");
      if (o.bid > o.ask) throw std::invalid_argument("bid above ask");
      o.mid = 0.5 * (o.bid + o.ask);
      o.dte = dates::weekdays_between(o.obs_date, o.expiry);
      if (o.dte < 0) throw std::invalid_argument("expiry before observation date");
      const auto s = sectors.find(o.ticker);
      if (s != sectors.end()) {
        o.sector = s->second.sector;
        o.is_etf = s->second.is_etf;
      }
      out.rows.push_back(std::move(o));
    } catch (const std::exception& e) {
      ++out.skipped;
      out.skip_messages.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

IngestResult ingest_ladder(const std::string& path, const surface::SectorMap& sectors) {
  auto f = open_or_throw(path);
  return read_ladder(f, sectors);
}

surface::SectorMap read_sectors(std::istream& in) {
  surface::SectorMap out;
  std::string line;
  if (!read_line(in, line)) throw CalibrationError("sector CSV is empty");
  const auto col = header_index(split_csv(line), {"ticker", "sector", "is_etf"}, "sector CSV");
  std::size_t line_no = 1;
  while (read_line(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const Fields f = split_csv(line);
    try {
      if (f.size() < 3) throw std::invalid_argument("expected 3 fields");
      const std::string& ticker = f[col.at("ticker")];
      if (ticker.empty()) throw std::invalid_argument("empty ticker");
      if (out.count(ticker)) throw std::invalid_argument("duplicate ticker " + ticker);
      out[ticker] = {f[col.at("sector")], to_bool(f[col.at("is_etf")])};
    } catch (const std::exception& e) {
      throw CalibrationError("sector CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

surface::SectorMap load_sectors(const std::string& path) {
  auto f = open_or_throw(path);
  return read_sectors(f);
}

surface::EarningsCalendar read_earnings(std::istream& in) {
  surface::EarningsCalendar out;
  std::string line;
  if (!read_line(in, line)) return out;
  const auto col = header_index(split_csv(line), {"ticker", "earnings_date"}, "earnings CSV");
  std::size_t line_no = 1;
  while (read_line(in, line)) {
    ++line_no;
    if (blank(line)) continue;
    const Fields f = split_csv(line);
    try {
      if (f.size() < 2) throw std::invalid_argument("expected 2 fields");
      out[f[col.at("ticker")]].push_back(dates::parse_iso(f[col.at("earnings_date")]));
    } catch (const std::exception& e) {
      throw CalibrationError("earnings CSV line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (auto& [t, d] : out) {
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
  }
  return out;
}

surface::EarningsCalendar load_earnings(const std::string& path) {
  auto f = open_or_throw(path);
  return read_earnings(f);
}

void attach_earnings(std::span<LadderObservation> rows, const surface::EarningsCalendar& calendar,
                     const surface::SectorMap& sectors, std::vector<std::string>* warnings) {
  bool warned = false;
  std::map<std::pair<std::string, dates::Date>, surface::EarningsFeatures> cache;
  for (auto& r : rows) {
    const auto key = std::make_pair(r.ticker, r.obs_date);
    auto it = cache.find(key);
    if (it == cache.end()) {
      std::vector<std::string> w;
      it = cache.emplace(key, surface::earnings_features(r.ticker, r.obs_date, calendar, sectors, &w)).first;
      if (warnings && !warned && !w.empty()) {
        warnings->insert(warnings->end(), w.begin(), w.end());
        warned = true;
      }
    }
    r.earnings = it->second;
  }
}

void write_ladder(std::ostream& out, std::span<const LadderObservation> rows) {
  out << "ticker,obs_date,expiry,strike,parity,bid,ask,iv,spot\n";
  std::ostringstream line;
  line << std::setprecision(10);
  for (const auto& r : rows) {
    line.str("");
    line << r.ticker << ',' << dates::format_iso(r.obs_date) << ',' << dates::format_iso(r.expiry) << ',' << r.strike
         << ',' << lattice::to_string(r.parity) << ',' << r.bid << ',' << r.ask << ',' << r.iv << ',' << r.spot << '\n';
    out << line.str();
  }
}

}  // namespace synthvol::calibration
