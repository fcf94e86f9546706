#pragma once

// Recombining binomial trees (Cox-Ross-Rubinstein and Leisen-Reimer) for
// American and European vanilla options, plus central finite-difference
// Greeks on either tree. All functions are pure.

#include <stdexcept>
#include <string>

namespace synthvol::lattice {

inline constexpr double kDefaultRate = 0.04;
inline constexpr double kTradingDaysPerYear = 252.0;
inline constexpr double kMinSigma = 1e-8;

enum class Parity { Call, Put };
enum class Style { American, European };

/// +1 for calls, -1 for puts.
constexpr double parity_sign(Parity parity) noexcept { return parity == Parity::Call ? 1.0 : -1.0; }

struct ContractSpec {
  double strike = 0.0;
  double tau = 0.0;  // years, DTE / 252
  Parity parity = Parity::Call;
  Style style = Style::American;
  double rate = kDefaultRate;
  double dividend = 0.0;
};

enum class LatticeKind { CRR, LR };

struct LatticeSpec {
  LatticeKind kind = LatticeKind::LR;
  int steps = 201;
};

struct GreeksResult {
  double delta = 0.0;
  double gamma = 0.0;
  double vega = 0.0;              // per unit of IV
  double vega_per_pct = 0.0;      // vega * 0.01
  bool gamma_aliasing = false;    // gamma came out materially negative
};

class LatticeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Terminal-layer geometry of a constructed tree: node i has price
/// spot * up^i * down^(steps - i).
struct TreeGeometry {
  double spot = 0.0;
  double up = 1.0;
  double down = 1.0;
  double prob_up = 0.5;
  double dt = 0.0;
  int steps = 0;
  bool degenerate = false;  // probabilities saturated; tree collapses to one path

  double terminal_node(int i) const;
};

/// Throws LatticeError when the contract or spot/sigma are unusable.
void validate_inputs(double spot, const ContractSpec& contract, double sigma, int steps);

TreeGeometry crr_geometry(double spot, const ContractSpec& contract, double sigma, int steps);

/// Leisen-Reimer tree via Peizer-Pratt method-2 inversion. `steps` must be odd.
TreeGeometry lr_geometry(double spot, const ContractSpec& contract, double sigma, int steps);

double crr_price(double spot, const ContractSpec& contract, double sigma, int steps);
double lr_price(double spot, const ContractSpec& contract, double sigma, int steps);
double price(double spot, const ContractSpec& contract, double sigma, const LatticeSpec& lattice);

/// Peizer-Pratt method-2 approximation to the inverse binomial CDF.
double peizer_pratt_inverse(double z, int steps);

/// Central differences: relative spot bump `h_spot`, absolute IV bump `h_sigma`.
GreeksResult fd_greeks(double spot, const ContractSpec& contract, double sigma,
                       const LatticeSpec& lattice, double h_spot = 0.015, double h_sigma = 0.005);

double intrinsic(double spot, double strike, Parity parity) noexcept;

std::string to_string(Parity parity);
Parity parse_parity(const std::string& text);
std::string to_string(LatticeKind kind);
LatticeKind parse_lattice_kind(const std::string& text);

}  // namespace synthvol::lattice
