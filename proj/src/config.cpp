#include "asl/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "asl/errors.hpp"
#include "asl/model.hpp"

namespace asl {

namespace {

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    raise(ErrorCode::Config, "bad value '" + value + "' for " + key);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    raise(ErrorCode::Config, "bad value '" + value + "' for " + key);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  raise(ErrorCode::Config,
        "bad value '" + value + "' for " + key + " (true/false)");
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(parse_double(key, trim(item)));
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (architecture != "mvgg5" && architecture != "mvgg9" &&
      architecture != "proposed") {
    raise(ErrorCode::Config, "architecture must be mvgg5, mvgg9 or proposed" +
                                 (architecture.empty()
                                      ? std::string(" (not set)")
                                      : ", got '" + architecture + "'"));
  }
  if (batch_size < 1) raise(ErrorCode::Config, "batch_size must be >= 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    raise(ErrorCode::Config, "test_fraction must be in (0, 1)");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    raise(ErrorCode::Config, "dropout must be in [0, 1)");
  }
  if (!(rho >= 0.0 && rho < 1.0)) {
    raise(ErrorCode::Config, "rho must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) raise(ErrorCode::Config, "epsilon must be positive");
  if (precision != "f32" && precision != "f64") {
    raise(ErrorCode::Config, "precision must be f32 or f64");
  }
  if (augment_enabled) augment.validate();
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      raise(ErrorCode::Config,
            "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "architecture") {
      cfg.architecture = value;
    } else if (key == "epochs") {
      cfg.epochs = static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "batch_size") {
      cfg.batch_size = static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "test_fraction") {
      cfg.test_fraction = parse_double(key, value);
    } else if (key == "dropout") {
      cfg.dropout = parse_double(key, value);
    } else if (key == "rho") {
      cfg.rho = parse_double(key, value);
    } else if (key == "epsilon") {
      cfg.epsilon = parse_double(key, value);
    } else if (key == "seed") {
      cfg.seed = parse_u64(key, value);
    } else if (key == "precision") {
      cfg.precision = value;
    } else if (key == "timing") {
      if (value == "wall") {
        cfg.wall_clock = true;
      } else if (value == "none") {
        cfg.wall_clock = false;
      } else {
        raise(ErrorCode::Config, "timing must be wall or none");
      }
    } else if (key == "augment") {
      cfg.augment_enabled = parse_bool(key, value);
    } else if (key == "augment.rotation_degrees") {
      cfg.augment.rotation_degrees = parse_double_list(key, value);
    } else if (key == "augment.noise_sigma") {
      cfg.augment.noise_sigma = parse_double(key, value);
    } else if (key == "augment.noise_copies") {
      cfg.augment.noise_copies =
          static_cast<std::size_t>(parse_u64(key, value));
    } else if (key == "augment.seed") {
      cfg.augment_seed = parse_u64(key, value);
    } else {
      raise(ErrorCode::Config, "unknown config key '" + key + "'");
    }
  }
  return cfg;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::Io, "cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_train_config(buf.str());
}

std::string train_config_to_text(const TrainConfig& cfg) {
  std::ostringstream os;
  os << "architecture = " << cfg.architecture << "\n";
  os << "epochs = " << cfg.epochs << "\n";
  os << "batch_size = " << cfg.batch_size << "\n";
  os << "test_fraction = " << fmt(cfg.test_fraction) << "\n";
  os << "dropout = " << fmt(cfg.dropout) << "\n";
  os << "rho = " << fmt(cfg.rho) << "\n";
  os << "epsilon = " << fmt(cfg.epsilon) << "\n";
  os << "seed = " << cfg.seed << "\n";
  os << "precision = " << cfg.precision << "\n";
  os << "timing = " << (cfg.wall_clock ? "wall" : "none") << "\n";
  os << "augment = " << (cfg.augment_enabled ? "true" : "false") << "\n";
  os << "augment.rotation_degrees = ";
  for (std::size_t i = 0; i < cfg.augment.rotation_degrees.size(); ++i) {
    if (i) os << ",";
    os << fmt(cfg.augment.rotation_degrees[i]);
  }
  os << "\n";
  os << "augment.noise_sigma = " << fmt(cfg.augment.noise_sigma) << "\n";
  os << "augment.noise_copies = " << cfg.augment.noise_copies << "\n";
  if (cfg.augment_seed) {
    os << "augment.seed = " << *cfg.augment_seed << "\n";
  }
  return os.str();
}

}  // namespace asl
