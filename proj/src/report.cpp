#include "eegalign/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "eegalign/error.hpp"
#include "eegalign/io.hpp"

namespace eegalign::report {
namespace {

struct Polar {
  const char* left;
  const char* right;  // nullptr on the midline
  double incl_deg;    // angle from the vertex
  double az_deg;      // 0 = nose, negative = left hemisphere
};

// Approximate 10-10 positions: the outer ring sits at 72 degrees from Cz and
// intermediate electrodes are interpolated in polar coordinates.
constexpr Polar kLayout[] = {
    {"Fpz", nullptr, 72, 0},     {"Fp1", "Fp2", 72, -18},     {"AF7", "AF8", 72, -36},
    {"AF3", "AF4", 63, -18},     {"F7", "F8", 72, -54},       {"F5", "F6", 63, -40.5},
    {"F3", "F4", 54, -27},       {"F1", "F2", 45, -13.5},     {"Fz", nullptr, 36, 0},
    {"FT7", "FT8", 72, -72},     {"FC5", "FC6", 58.5, -54},   {"FC3", "FC4", 45, -36},
    {"FC1", "FC2", 31.5, -18},   {"FCz", nullptr, 18, 0},     {"T7", "T8", 72, -90},
    {"C5", "C6", 54, -90},       {"C3", "C4", 36, -90},       {"C1", "C2", 18, -90},
    {"Cz", nullptr, 0, 0},       {"TP7", "TP8", 72, -108},    {"CP5", "CP6", 58.5, -126},
    {"CP3", "CP4", 45, -144},    {"CP1", "CP2", 31.5, -162},  {"CPz", nullptr, 18, 180},
    {"P7", "P8", 72, -126},      {"P5", "P6", 63, -139.5},    {"P3", "P4", 54, -153},
    {"P1", "P2", 45, -166.5},    {"Pz", nullptr, 36, 180},    {"PO7", "PO8", 72, -144},
    {"PO3", "PO4", 63, -162},    {"POz", nullptr, 54, 180},   {"O1", "O2", 72, -162},
    {"Oz", nullptr, 72, 180},
};

Electrode place(const char* name, double incl_deg, double az_deg) {
  const double r = incl_deg / 90.0;
  const double az = az_deg * std::numbers::pi / 180.0;
  Electrode e{name, r * std::sin(az), r * std::cos(az)};
  // Round to 4 decimals so the shipped CSV reproduces these values exactly.
  e.x = std::round(e.x * 1e4) / 1e4 + 0.0;
  e.y = std::round(e.y * 1e4) / 1e4 + 0.0;
  return e;
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string hex_color(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

double round6(double v) { return std::strtod(format_number(v).c_str(), nullptr); }

}  // namespace

Montage default_montage() {
  Montage m;
  for (const auto& p : kLayout) {
    m.electrodes.push_back(place(p.left, p.incl_deg, p.az_deg));
    if (p.right != nullptr) m.electrodes.push_back(place(p.right, p.incl_deg, -p.az_deg));
  }
  return m;
}

std::vector<std::string> default_channel_names() {
  std::vector<std::string> names;
  for (const auto& e : default_montage().electrodes) names.push_back(e.name);
  return names;
}

Montage read_montage(const std::filesystem::path& path) {
  const auto lines = io::read_lines(path);
  if (lines.empty() || lines.front() != "name,x,y") {
    throw ValidationError(path.string() + ": montage header must be 'name,x,y'");
  }
  Montage m;
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::stringstream ss(lines[ln]);
    std::string name, xs, ys;
    const std::string where = path.string() + ":" + std::to_string(ln + 1);
    if (!std::getline(ss, name, ',') || !std::getline(ss, xs, ',') || !std::getline(ss, ys)) {
      throw ValidationError(where + ": expected name,x,y");
    }
    Electrode e;
    e.name = name;
    try {
      std::size_t px = 0, py = 0;
      e.x = std::stod(xs, &px);
      e.y = std::stod(ys, &py);
      if (px != xs.size() || py != ys.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError(where + ": malformed coordinates");
    }
    if (e.x * e.x + e.y * e.y > 1.0 + 1e-12) {
      throw ValidationError(where + ": electrode '" + name + "' lies outside the unit disc");
    }
    if (!seen.emplace(name, m.electrodes.size()).second) {
      throw ValidationError(where + ": duplicate electrode '" + name + "'");
    }
    m.electrodes.push_back(std::move(e));
  }
  return m;
}

std::vector<double> channel_weight_map(const RowMatrix& W, const TensorShape& shape,
                                       std::span<const std::size_t> columns) {
  const std::size_t per_channel = shape.features * shape.frames;
  if (columns.empty() && static_cast<std::size_t>(W.cols()) != shape.size()) {
    throw ValidationError("weight matrix has " + std::to_string(W.cols()) +
                          " targets, tensor shape implies " + std::to_string(shape.size()));
  }
  if (!columns.empty() && columns.size() != static_cast<std::size_t>(W.cols())) {
    throw ValidationError("column map length does not match the weight matrix");
  }
  std::vector<double> ss(shape.channels, 0.0);
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    const std::size_t flat = columns.empty() ? static_cast<std::size_t>(j) : columns[static_cast<std::size_t>(j)];
    if (flat >= shape.size()) throw ValidationError("target index beyond tensor shape");
    ss[flat / per_channel] += W.col(j).squaredNorm();
  }
  std::vector<double> scores(shape.channels);
  for (std::size_t c = 0; c < scores.size(); ++c) scores[c] = std::sqrt(ss[c]);
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double min = *lo, max = *hi;
  for (double& s : scores) s = max > min ? (s - min) / (max - min) : 0.5;
  return scores;
}

Rgb diverging_color(double score) {
  const double s = std::clamp(score, 0.0, 1.0);
  if (s <= 0.5) {
    const int v = static_cast<int>(std::lround(255.0 * s / 0.5));
    return {v, v, 255};
  }
  const int v = static_cast<int>(std::lround(255.0 * (1.0 - (s - 0.5) / 0.5)));
  return {255, v, v};
}

std::string topomap_svg(std::span<const double> scores, std::span<const std::string> channels,
                        const Montage& montage, const std::string& title) {
  if (scores.size() != channels.size()) {
    throw ValidationError("topomap: " + std::to_string(scores.size()) + " scores for " +
                          std::to_string(channels.size()) + " channels");
  }
  std::unordered_map<std::string, const Electrode*> pos;
  for (const auto& e : montage.electrodes) pos.emplace(e.name, &e);
  for (const auto& ch : channels) {
    if (!pos.contains(ch)) throw ValidationError("montage has no position for channel '" + ch + "'");
  }

  constexpr double kWidth = 420, kHeight = 500, kCx = 210, kCy = 230, kRadius = 180;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<defs><linearGradient id=\"bwr\" x1=\"0\" y1=\"0\" x2=\"1\" y2=\"0\">"
     << "<stop offset=\"0\" stop-color=\"#0000ff\"/><stop offset=\"0.5\" stop-color=\"#ffffff\"/>"
     << "<stop offset=\"1\" stop-color=\"#ff0000\"/></linearGradient></defs>\n"
     << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << kCx << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"14\">" << xml_escape(title) << "</text>\n";
  }
  // Head outline and nose as paths so circles are reserved for electrodes.
  os << "<path d=\"M " << fixed(kCx - kRadius, 2) << ' ' << fixed(kCy, 2) << " A " << kRadius << ' '
     << kRadius << " 0 1 1 " << fixed(kCx + kRadius, 2) << ' ' << fixed(kCy, 2) << " A " << kRadius
     << ' ' << kRadius << " 0 1 1 " << fixed(kCx - kRadius, 2) << ' ' << fixed(kCy, 2)
     << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"2\"/>\n"
     << "<path d=\"M " << fixed(kCx - 14, 2) << ' ' << fixed(kCy - kRadius + 1, 2) << " L "
     << fixed(kCx, 2) << ' ' << fixed(kCy - kRadius - 18, 2) << " L " << fixed(kCx + 14, 2) << ' '
     << fixed(kCy - kRadius + 1, 2) << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"2\"/>\n";
  for (std::size_t i = 0; i < channels.size(); ++i) {
    const Electrode& e = *pos.at(channels[i]);
    os << "<circle cx=\"" << fixed(kCx + e.x * kRadius, 2) << "\" cy=\""
       << fixed(kCy - e.y * kRadius, 2) << "\" r=\"11\" fill=\""
       << hex_color(diverging_color(scores[i])) << "\" stroke=\"#333333\" stroke-width=\"0.8\">"
       << "<title>" << xml_escape(channels[i]) << ' ' << format_number(scores[i]) << "</title>"
       << "</circle>\n";
  }
  const double bar_y = kCy + kRadius + 40;
  os << "<rect x=\"110\" y=\"" << fixed(bar_y, 2) << "\" width=\"200\" height=\"14\" "
     << "fill=\"url(#bwr)\" stroke=\"#333333\" stroke-width=\"0.8\"/>\n"
     << "<text x=\"110\" y=\"" << fixed(bar_y + 30, 2)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">0</text>\n"
     << "<text x=\"310\" y=\"" << fixed(bar_y + 30, 2)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">1</text>\n"
     << "<text x=\"210\" y=\"" << fixed(bar_y + 30, 2)
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">weight norm</text>\n"
     << "</svg>\n";
  return os.str();
}

void render_topomap_svg(std::span<const double> scores, std::span<const std::string> channels,
                        const Montage& montage, const std::filesystem::path& path,
                        const std::string& title) {
  io::write_text(path, topomap_svg(scores, channels, montage, title));
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string results_csv(std::span<const align::SweepResult> results) {
  std::ostringstream os;
  os << "label,alpha,train_r2,test_r2,train_corr,test_corr\n";
  for (const auto& r : results) {
    os << r.label << ',' << format_number(r.alpha) << ',' << format_number(r.train_r2) << ','
       << format_number(r.test_r2) << ',' << format_number(r.train_corr) << ','
       << format_number(r.test_corr) << '\n';
  }
  return os.str();
}

std::string results_json(std::span<const align::SweepResult> results) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["label"] = r.label;
    j["strategy"] = std::string(align::strategy_name(r.strategy));
    j["position"] = r.position;
    j["p"] = r.p;
    j["alpha"] = round6(r.alpha);
    j["train_r2"] = round6(r.train_r2);
    j["test_r2"] = round6(r.test_r2);
    j["train_corr"] = round6(r.train_corr);
    j["test_corr"] = round6(r.test_corr);
    nlohmann::ordered_json scores = nlohmann::ordered_json::array();
    for (double s : r.channel_scores) scores.push_back(round6(s));
    j["channel_scores"] = std::move(scores);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

void write_results(std::span<const align::SweepResult> results, const std::filesystem::path& path,
                   Format format) {
  if (results.empty()) throw ValidationError("refusing to write an empty result set");
  io::write_text(path, format == Format::Csv ? results_csv(results) : results_json(results));
}

std::vector<align::SweepResult> read_results_json(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw ValidationError(path.string() + ": expected a JSON array of results");
  std::vector<align::SweepResult> out;
  try {
    for (const auto& j : doc) {
      align::SweepResult r;
      r.label = j.at("label").get<std::string>();
      r.strategy = align::parse_strategy(j.at("strategy").get<std::string>());
      r.position = j.at("position").get<std::size_t>();
      r.p = j.at("p").get<std::size_t>();
      r.alpha = j.at("alpha").get<double>();
      r.train_r2 = j.at("train_r2").get<double>();
      r.test_r2 = j.at("test_r2").get<double>();
      r.train_corr = j.at("train_corr").get<double>();
      r.test_corr = j.at("test_corr").get<double>();
      r.channel_scores = j.at("channel_scores").get<std::vector<double>>();
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace eegalign::report
