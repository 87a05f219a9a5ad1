#include "sarlc/geo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include "sarlc/errors.hpp"

namespace sarlc {
namespace {

struct TransverseMercator {
  double a;          // semi-major axis
  double f;          // flattening
  double lon0_deg;   // central meridian
  double k0;
  double false_easting;
  double false_northing;
};

constexpr double kGrs80InvF = 298.257222101;
constexpr double kWgs84InvF = 298.257223563;
constexpr double kDeg = std::numbers::pi / 180.0;

std::optional<int> epsg_code(const std::string& crs) {
  constexpr std::string_view prefix = "EPSG:";
  if (crs.size() <= prefix.size() || crs.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
  try {
    std::size_t used = 0;
    int code = std::stoi(crs.substr(prefix.size()), &used);
    if (used != crs.size() - prefix.size()) return std::nullopt;
    return code;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<TransverseMercator> projection_for(int code) {
  if (code == 3067) return TransverseMercator{6378137.0, 1.0 / kGrs80InvF, 27.0, 0.9996, 500000.0, 0.0};
  if (code >= 32601 && code <= 32660) {
    int zone = code - 32600;
    return TransverseMercator{6378137.0, 1.0 / kWgs84InvF, -183.0 + 6.0 * zone, 0.9996, 500000.0, 0.0};
  }
  if (code >= 25828 && code <= 25838) {
    int zone = code - 25800;
    return TransverseMercator{6378137.0, 1.0 / kGrs80InvF, -183.0 + 6.0 * zone, 0.9996, 500000.0, 0.0};
  }
  return std::nullopt;
}

// Kruger series to sixth order in the third flattening n.
struct KrugerSeries {
  double e;                 // eccentricity
  double rect;              // rectifying radius A
  std::array<double, 6> alpha;
  std::array<double, 6> beta;
};

KrugerSeries kruger(const TransverseMercator& p) {
  const double n = p.f / (2.0 - p.f);
  const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
  KrugerSeries k;
  k.e = std::sqrt(p.f * (2.0 - p.f));
  k.rect = p.a / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
  k.alpha = {n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 - 127.0 * n5 / 288.0 +
                 7891.0 * n6 / 37800.0,
             13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 + 281.0 * n5 / 630.0 -
                 1983433.0 * n6 / 1935360.0,
             61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0 + 167603.0 * n6 / 181440.0,
             49561.0 * n4 / 161280.0 - 179.0 * n5 / 168.0 + 6601661.0 * n6 / 7257600.0,
             34729.0 * n5 / 80640.0 - 3418889.0 * n6 / 1995840.0,
             212378941.0 * n6 / 319334400.0};
  k.beta = {n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0 - 81.0 * n5 / 512.0 + 96199.0 * n6 / 604800.0,
            n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0 + 46.0 * n5 / 105.0 - 1118711.0 * n6 / 3870720.0,
            17.0 * n3 / 480.0 - 37.0 * n4 / 840.0 - 209.0 * n5 / 4480.0 + 5569.0 * n6 / 90720.0,
            4397.0 * n4 / 161280.0 - 11.0 * n5 / 504.0 - 830251.0 * n6 / 7257600.0,
            4583.0 * n5 / 161280.0 - 108847.0 * n6 / 3991680.0,
            20648693.0 * n6 / 638668800.0};
  return k;
}

std::array<double, 2> tm_forward(const TransverseMercator& p, LonLat ll) {
  const KrugerSeries k = kruger(p);
  const double phi = ll.lat * kDeg;
  const double lam = (ll.lon - p.lon0_deg) * kDeg;
  const double sin_phi = std::sin(phi);
  // Conformal latitude as tan(chi).
  const double t = std::sinh(std::atanh(sin_phi) - k.e * std::atanh(k.e * sin_phi));
  const double xi0 = std::atan2(t, std::cos(lam));
  const double eta0 = std::atanh(std::sin(lam) / std::sqrt(1.0 + t * t));
  double xi = xi0;
  double eta = eta0;
  for (int j = 1; j <= 6; ++j) {
    const double a = k.alpha[static_cast<std::size_t>(j - 1)];
    xi += a * std::sin(2.0 * j * xi0) * std::cosh(2.0 * j * eta0);
    eta += a * std::cos(2.0 * j * xi0) * std::sinh(2.0 * j * eta0);
  }
  return {p.false_easting + p.k0 * k.rect * eta, p.false_northing + p.k0 * k.rect * xi};
}

LonLat tm_inverse(const TransverseMercator& p, double x, double y) {
  const KrugerSeries k = kruger(p);
  const double xi = (y - p.false_northing) / (p.k0 * k.rect);
  const double eta = (x - p.false_easting) / (p.k0 * k.rect);
  double xi0 = xi;
  double eta0 = eta;
  for (int j = 1; j <= 6; ++j) {
    const double b = k.beta[static_cast<std::size_t>(j - 1)];
    xi0 -= b * std::sin(2.0 * j * xi) * std::cosh(2.0 * j * eta);
    eta0 -= b * std::cos(2.0 * j * xi) * std::sinh(2.0 * j * eta);
  }
  const double lam = std::atan2(std::sinh(eta0), std::cos(xi0));
  const double taup = std::sin(xi0) / std::hypot(std::sinh(eta0), std::cos(xi0));
  // Newton iteration from conformal tan(chi) back to tan(phi).
  const double e2m = 1.0 - k.e * k.e;
  double tau = taup / e2m;
  for (int i = 0; i < 8; ++i) {
    const double s1 = std::sqrt(1.0 + tau * tau);
    const double sig = std::sinh(k.e * std::atanh(k.e * tau / s1));
    const double taui = tau * std::sqrt(1.0 + sig * sig) - sig * s1;
    const double dtau = (taup - taui) / std::sqrt(1.0 + taui * taui) * (1.0 + e2m * tau * tau) / (e2m * s1);
    tau += dtau;
    if (std::abs(dtau) < 1e-15 * std::max(1.0, std::abs(tau))) break;
  }
  return {p.lon0_deg + lam / kDeg, std::atan(tau) / kDeg};
}

}  // namespace

bool crs_supported(const std::string& crs) {
  auto code = epsg_code(crs);
  return code && (*code == 4326 || projection_for(*code).has_value());
}

LonLat to_lonlat(const std::string& crs, double x, double y) {
  auto code = epsg_code(crs);
  if (code && *code == 4326) return {x, y};
  if (code) {
    if (auto p = projection_for(*code)) return tm_inverse(*p, x, y);
  }
  throw InputError("unsupported CRS '" + crs + "'");
}

std::array<double, 2> from_lonlat(const std::string& crs, LonLat ll) {
  auto code = epsg_code(crs);
  if (code && *code == 4326) return {ll.lon, ll.lat};
  if (code) {
    if (auto p = projection_for(*code)) return tm_forward(*p, ll);
  }
  throw InputError("unsupported CRS '" + crs + "'");
}

LonLat pixel_to_lonlat(const Geometry& g, double col, double row) {
  auto xy = g.transform.apply(col, row);
  return to_lonlat(g.crs, xy[0], xy[1]);
}

}  // namespace sarlc
