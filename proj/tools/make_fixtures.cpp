// Writes the synthetic fixtures shipped under data/fixtures.

#include <fstream>
#include <iomanip>
#include <iostream>

#include "synthvol/cli.hpp"
#include "synthvol/synthetic.hpp"

namespace fs = std::filesystem;
using namespace synthvol;

namespace {

void write_ladder(const fs::path& path, const synthetic::LadderSpec& spec) {
  std::ofstream f(path);
  const auto rows = synthetic::generate_ladder(spec);
  calibration::write_ladder(f, rows);
  std::cout << path.string() << ": " << rows.size() << " rows\n";
}

void write_earnings(const fs::path& path, const surface::EarningsCalendar& calendar) {
  std::ofstream f(path);
  f << "ticker,earnings_date\n";
  for (const auto& [ticker, prints] : calendar) {
    for (const auto d : prints) f << ticker << ',' << dates::format_iso(d) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path dir = argc > 1 ? argv[1] : "data/fixtures";
  fs::create_directories(dir);

  const auto recovery = synthetic::recovery_fixture();
  write_ladder(dir / "ladder.csv", recovery);
  write_earnings(dir / "earnings.csv", recovery.calendar);

  const auto events = synthetic::event_fixture();
  write_ladder(dir / "event_ladder.csv", events);
  write_earnings(dir / "event_earnings.csv", events.calendar);

  const auto hmm = jumphmm::reference_params();
  io::write_json_file((dir / "hmm.json").string(), hmm);
  auto rng = jumphmm::stream_rng(11, 0);
  const auto states = jumphmm::simulate_states(hmm, 2520, rng);
  const auto draws = jumphmm::simulate_returns(hmm, states, rng);
  std::ofstream r(dir / "returns.csv");
  r << std::setprecision(17) << "day,return\n";
  for (std::size_t t = 0; t < draws.growth.size(); ++t) r << t << ',' << draws.growth[t] << '\n';
  return 0;
}
