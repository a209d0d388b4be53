#include "ddrecon/config.hpp"

#include "ddrecon/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ddrecon {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += (i ? "," : "") + format_double(values[i]);
  }
  return out;
}

double parse_double(const std::string& text) {
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) {
    throw std::invalid_argument("trailing characters");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an unsigned integer");
  }
  return v;
}

bool parse_bool(const std::string& text) {
  if (text == "true" || text == "1") {
    return true;
  }
  if (text == "false" || text == "0") {
    return false;
  }
  throw std::invalid_argument("not a boolean");
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    out.push_back(parse_double(trim(item)));
  }
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset.height", [](auto& c, const auto& v) { c.dataset.height = parse_u64(v); }},
      {"dataset.width", [](auto& c, const auto& v) { c.dataset.width = parse_u64(v); }},
      {"dataset.ncoil", [](auto& c, const auto& v) { c.dataset.ncoil = parse_u64(v); }},
      {"dataset.slices", [](auto& c, const auto& v) { c.dataset.slices = parse_u64(v); }},
      {"dataset.n_ellipses", [](auto& c, const auto& v) { c.dataset.n_ellipses = parse_u64(v); }},
      {"dataset.noise_sigma", [](auto& c, const auto& v) { c.dataset.noise_sigma = parse_double(v); }},
      {"dataset.seed", [](auto& c, const auto& v) { c.dataset.seed = parse_u64(v); }},
      {"mask.acceleration", [](auto& c, const auto& v) { c.mask.acceleration = parse_double(v); }},
      {"mask.center_fraction", [](auto& c, const auto& v) { c.mask.center_fraction = parse_double(v); }},
      {"split.train", [](auto& c, const auto& v) { c.split[0] = parse_double(v); }},
      {"split.val", [](auto& c, const auto& v) { c.split[1] = parse_double(v); }},
      {"split.test", [](auto& c, const auto& v) { c.split[2] = parse_double(v); }},
      {"inet.base_width", [](auto& c, const auto& v) { c.cascade.inet.base_width = parse_u64(v); }},
      {"inet.depth", [](auto& c, const auto& v) { c.cascade.inet.depth = parse_u64(v); }},
      {"inet.reduction_ratio", [](auto& c, const auto& v) { c.cascade.inet.reduction_ratio = parse_u64(v); }},
      {"knet.base_width", [](auto& c, const auto& v) { c.cascade.knet.base_width = parse_u64(v); }},
      {"knet.depth", [](auto& c, const auto& v) { c.cascade.knet.depth = parse_u64(v); }},
      {"knet.reduction_ratio", [](auto& c, const auto& v) { c.cascade.knet.reduction_ratio = parse_u64(v); }},
      {"cascade.n_iterations", [](auto& c, const auto& v) { c.cascade.n_iterations = parse_u64(v); }},
      {"cascade.use_cross_iteration_residual",
       [](auto& c, const auto& v) { c.cascade.use_cross_iteration_residual = parse_bool(v); }},
      {"cascade.dc_lambda", [](auto& c, const auto& v) { c.cascade.dc.lambda = parse_double(v); }},
      {"train.epochs", [](auto& c, const auto& v) { c.train.epochs = parse_u64(v); }},
      {"train.learning_rate", [](auto& c, const auto& v) { c.train.learning_rate = parse_double(v); }},
      {"train.batch_size", [](auto& c, const auto& v) { c.train.batch_size = parse_u64(v); }},
      {"train.seed", [](auto& c, const auto& v) { c.train.seed = parse_u64(v); }},
      {"train.loss_weights_image", [](auto& c, const auto& v) { c.train.loss_weights.image = parse_list(v); }},
      {"train.loss_weights_kspace", [](auto& c, const auto& v) { c.train.loss_weights.kspace = parse_list(v); }},
      {"paths.output_dir", [](auto& c, const auto& v) { c.output_dir = v; }},
      {"paths.dataset", [](auto& c, const auto& v) { c.dataset_path = v; }},
      {"paths.checkpoint_dir", [](auto& c, const auto& v) { c.checkpoint_dir = v; }},
  };
  return table;
}

} // namespace

ExperimentConfig::ExperimentConfig() { finalize(); }

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  ExperimentConfig config;
  bool image_weights = false;
  bool kspace_weights = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) {
      end = text.size();
    }
    ++line_no;
    std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line = trim(line.substr(0, hash));
    }
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::config, "line " + std::to_string(line_no) + ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw Error(ErrorCode::config, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    try {
      it->second(config, value);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::config,
                  "line " + std::to_string(line_no) + ": bad value '" + value + "' for " + key + " (" + e.what() + ")");
    }
    image_weights = image_weights || key == "train.loss_weights_image";
    kspace_weights = kspace_weights || key == "train.loss_weights_kspace";
  }
  const auto defaults = LossWeights::defaults(config.cascade.n_iterations);
  if (!image_weights) {
    config.train.loss_weights.image = defaults.image;
  }
  if (!kspace_weights) {
    config.train.loss_weights.kspace = defaults.kspace;
  }
  try {
    config.finalize();
  } catch (const Error& e) {
    throw Error(ErrorCode::config, std::string("invalid configuration: ") + e.what());
  }
  return config;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::io, "cannot open config " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  out << "dataset.height=" << dataset.height << '\n'
      << "dataset.width=" << dataset.width << '\n'
      << "dataset.ncoil=" << dataset.ncoil << '\n'
      << "dataset.slices=" << dataset.slices << '\n'
      << "dataset.n_ellipses=" << dataset.n_ellipses << '\n'
      << "dataset.noise_sigma=" << format_double(dataset.noise_sigma) << '\n'
      << "dataset.seed=" << dataset.seed << '\n'
      << "mask.acceleration=" << format_double(mask.acceleration) << '\n'
      << "mask.center_fraction=" << format_double(mask.center_fraction) << '\n'
      << "split.train=" << format_double(split[0]) << '\n'
      << "split.val=" << format_double(split[1]) << '\n'
      << "split.test=" << format_double(split[2]) << '\n'
      << "inet.base_width=" << cascade.inet.base_width << '\n'
      << "inet.depth=" << cascade.inet.depth << '\n'
      << "inet.reduction_ratio=" << cascade.inet.reduction_ratio << '\n'
      << "knet.base_width=" << cascade.knet.base_width << '\n'
      << "knet.depth=" << cascade.knet.depth << '\n'
      << "knet.reduction_ratio=" << cascade.knet.reduction_ratio << '\n'
      << "cascade.n_iterations=" << cascade.n_iterations << '\n'
      << "cascade.use_cross_iteration_residual=" << (cascade.use_cross_iteration_residual ? "true" : "false") << '\n'
      << "cascade.dc_lambda=" << format_double(cascade.dc.lambda) << '\n'
      << "train.epochs=" << train.epochs << '\n'
      << "train.learning_rate=" << format_double(train.learning_rate) << '\n'
      << "train.batch_size=" << train.batch_size << '\n'
      << "train.seed=" << train.seed << '\n'
      << "train.loss_weights_image=" << format_list(train.loss_weights.image) << '\n'
      << "train.loss_weights_kspace=" << format_list(train.loss_weights.kspace) << '\n'
      << "paths.output_dir=" << output_dir.string() << '\n'
      << "paths.dataset=" << dataset_path.string() << '\n'
      << "paths.checkpoint_dir=" << checkpoint_dir.string() << '\n';
  return out.str();
}

std::filesystem::path ExperimentConfig::resolved_dataset_path() const {
  return dataset_path.empty() ? output_dir / "dataset.ddmk" : dataset_path;
}

std::filesystem::path ExperimentConfig::resolved_checkpoint_dir() const {
  return checkpoint_dir.empty() ? output_dir / "checkpoints" : checkpoint_dir;
}

std::filesystem::path ExperimentConfig::split_manifest_path() const {
  auto p = resolved_dataset_path();
  p += ".split.tsv";
  return p;
}

void ExperimentConfig::finalize() {
  const auto channels = 2 * dataset.ncoil;
  cascade.ncoil = dataset.ncoil;
  cascade.inet.in_channels = cascade.inet.out_channels = channels;
  cascade.knet.in_channels = cascade.knet.out_channels = channels;
  train.checkpoint_dir = resolved_checkpoint_dir();
  cascade.validate();
  train.validate(cascade.n_iterations);
  if (dataset.height < 8 || dataset.width < 8 || dataset.ncoil == 0) {
    throw Error(ErrorCode::invalid_argument, "dataset: height/width must be >= 8 and ncoil >= 1");
  }
  if (dataset.slices < 3) {
    throw Error(ErrorCode::invalid_argument, "dataset: need at least 3 slices for a train/val/test split");
  }
  if (!(mask.acceleration > 1.0) || !(mask.center_fraction >= 0.0 && mask.center_fraction < 1.0)) {
    throw Error(ErrorCode::invalid_argument, "mask: acceleration must be > 1 and center_fraction in [0, 1)");
  }
  if (std::any_of(split.begin(), split.end(), [](double f) { return !(f >= 0.0); }) ||
      std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9) {
    throw Error(ErrorCode::invalid_argument, "split: fractions must be non-negative and sum to 1");
  }
  const auto a = std::filesystem::weakly_canonical(output_dir);
  const auto d = std::filesystem::weakly_canonical(resolved_dataset_path());
  const auto c = std::filesystem::weakly_canonical(resolved_checkpoint_dir());
  if (a == d || a == c || d == c) {
    throw Error(ErrorCode::invalid_argument, "paths.output_dir, paths.dataset and paths.checkpoint_dir must differ");
  }
}

} // namespace ddrecon
