#include "deeposets/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "deeposets/common.hpp"

namespace deeposets {

namespace {

constexpr const char* kHeader = "deeposets-checkpoint v1";
const char* const kSubnetNames[] = {"x_embed", "y_embed", "encoder", "branch",
                                    "trunk"};

std::vector<const nn::DenseNet*> subnets(const DeepOSetsModel& model) {
  return {&model.x_embed, &model.y_embed, &model.encoder, &model.branch,
          &model.trunk};
}

std::vector<nn::DenseNet*> subnets(DeepOSetsModel& model) {
  return {&model.x_embed, &model.y_embed, &model.encoder, &model.branch,
          &model.trunk};
}

void write_doubles(std::ostream& os, const char* key,
                   const std::vector<double>& values) {
  os << key;
  for (double v : values) os << ' ' << format_double(v);
  os << '\n';
}

void write_sizes(std::ostream& os, const char* key,
                 const std::vector<int>& sizes) {
  os << key;
  for (int s : sizes) os << ' ' << s;
  os << '\n';
}

void write_acts(std::ostream& os, const char* key,
                const std::vector<nn::Activation>& acts) {
  os << key;
  for (nn::Activation a : acts) os << ' ' << nn::activation_name(a);
  os << '\n';
}

// Strict line-oriented reader that tracks line numbers for diagnostics.
class Reader {
 public:
  Reader(std::istream& is, std::string origin)
      : is_(is), origin_(std::move(origin)) {}

  // Next line split into tokens; first token must equal `key`.
  std::vector<std::string> expect(const std::string& key) {
    std::string line;
    if (!std::getline(is_, line)) {
      throw IoError(msg(origin_, ": corrupt checkpoint: truncated while "
                        "expecting '", key, "' (line ", line_no_ + 1, ")"));
    }
    ++line_no_;
    std::vector<std::string> tokens;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    if (tokens.empty() || tokens.front() != key) {
      throw IoError(msg(origin_, ":", line_no_,
                        ": corrupt checkpoint: expected '", key, "', got '",
                        tokens.empty() ? std::string() : tokens.front(), "'"));
    }
    return tokens;
  }

  long value_long(const std::string& key) {
    const auto tokens = expect(key);
    require(tokens.size() == 2, key);
    return parse_long(tokens[1], key);
  }

  std::uint64_t value_u64(const std::string& key) {
    const auto tokens = expect(key);
    require(tokens.size() == 2, key);
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(tokens[1].c_str(), &end, 10);
    require(end && *end == '\0', key);
    return v;
  }

  double value_double(const std::string& key) {
    const auto tokens = expect(key);
    require(tokens.size() == 2, key);
    return parse_double(tokens[1], key);
  }

  std::vector<double> value_doubles(const std::string& key,
                                    std::size_t count) {
    const auto tokens = expect(key);
    require(tokens.size() == count + 1, key);
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
      values[i] = parse_double(tokens[i + 1], key);
    }
    return values;
  }

  std::vector<int> value_ints(const std::string& key) {
    const auto tokens = expect(key);
    require(tokens.size() >= 2, key);
    std::vector<int> values;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      values.push_back(static_cast<int>(parse_long(tokens[i], key)));
    }
    return values;
  }

  std::vector<nn::Activation> value_acts(const std::string& key) {
    const auto tokens = expect(key);
    require(tokens.size() >= 2, key);
    std::vector<nn::Activation> acts;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      acts.push_back(nn::activation_from_name(tokens[i]));
    }
    return acts;
  }

  long line_no() const { return line_no_; }
  const std::string& origin() const { return origin_; }

  void require(bool ok, const std::string& key) {
    if (!ok) {
      throw IoError(msg(origin_, ":", line_no_,
                        ": corrupt checkpoint: malformed '", key, "' record"));
    }
  }

 private:
  long parse_long(const std::string& tok, const std::string& key) {
    char* end = nullptr;
    const long v = std::strtol(tok.c_str(), &end, 10);
    require(end && *end == '\0', key);
    return v;
  }

  double parse_double(const std::string& tok, const std::string& key) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    require(end && *end == '\0', key);
    return v;
  }

  std::istream& is_;
  std::string origin_;
  long line_no_ = 0;
};

void write_net(std::ostream& os, const char* name, const nn::DenseNet& net) {
  os << "net " << name << ' ' << net.layers.size() << '\n';
  for (const nn::DenseLayer& layer : net.layers) {
    os << "layer " << layer.out_dim << ' ' << layer.in_dim << ' '
       << nn::activation_name(layer.activation) << '\n';
    write_doubles(os, "bias", layer.bias);
    write_doubles(os, "weights", layer.weights);
  }
}

nn::DenseNet read_net(Reader& reader, const std::string& name) {
  const auto header = reader.expect("net");
  reader.require(header.size() == 3 && header[1] == name, "net");
  char* end = nullptr;
  const long layer_count = std::strtol(header[2].c_str(), &end, 10);
  reader.require(end && *end == '\0' && layer_count > 0, "net");

  nn::DenseNet net;
  net.layers.resize(static_cast<std::size_t>(layer_count));
  for (nn::DenseLayer& layer : net.layers) {
    const auto lt = reader.expect("layer");
    reader.require(lt.size() == 4, "layer");
    layer.out_dim = static_cast<int>(std::strtol(lt[1].c_str(), nullptr, 10));
    layer.in_dim = static_cast<int>(std::strtol(lt[2].c_str(), nullptr, 10));
    reader.require(layer.out_dim > 0 && layer.in_dim > 0, "layer");
    layer.activation = nn::activation_from_name(lt[3]);
    const std::size_t n_w = static_cast<std::size_t>(layer.out_dim) *
                            static_cast<std::size_t>(layer.in_dim);
    layer.bias =
        reader.value_doubles("bias", static_cast<std::size_t>(layer.out_dim));
    layer.weights = reader.value_doubles("weights", n_w);
  }
  return net;
}

void write_moments(std::ostream& os,
                   const std::vector<nn::GradientTape::LayerGrad>& moments) {
  for (const nn::GradientTape::LayerGrad& layer : moments) {
    write_doubles(os, "mb", layer.bias);
    write_doubles(os, "mw", layer.weights);
  }
}

std::vector<nn::GradientTape::LayerGrad> read_moments(Reader& reader,
                                                      const nn::DenseNet& net) {
  std::vector<nn::GradientTape::LayerGrad> moments(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    moments[i].bias = reader.value_doubles("mb", net.layers[i].bias.size());
    moments[i].weights =
        reader.value_doubles("mw", net.layers[i].weights.size());
  }
  return moments;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void save_checkpoint(const Checkpoint& ckpt, std::ostream& os) {
  const DeepOSetsModel& model = ckpt.model;
  const ModelConfig& config = model.config;
  os << kHeader << '\n';
  os << "d " << config.input_dim << '\n';
  os << "pair_embed_dim " << config.pair_embed_dim << '\n';
  write_sizes(os, "encoder_sizes", config.encoder_sizes);
  write_acts(os, "encoder_acts", config.encoder_acts);
  write_sizes(os, "branch_sizes", config.branch_sizes);
  write_acts(os, "branch_acts", config.branch_acts);
  write_sizes(os, "trunk_sizes", config.trunk_sizes);
  write_acts(os, "trunk_acts", config.trunk_acts);
  os << "readout_width " << config.readout_width << '\n';
  os << "seed " << ckpt.seed << '\n';
  os << "iterations " << ckpt.iterations << '\n';
  os << "final_loss " << format_double(ckpt.final_loss) << '\n';

  const auto nets = subnets(model);
  for (std::size_t i = 0; i < nets.size(); ++i) {
    write_net(os, kSubnetNames[i], *nets[i]);
  }
  os << "b0 " << format_double(model.b0) << '\n';

  os << "optimizer " << (ckpt.optimizer ? 1 : 0) << '\n';
  if (ckpt.optimizer) {
    const OptimizerSnapshot& opt = *ckpt.optimizer;
    os << "adam_steps " << opt.steps << '\n';
    for (std::size_t i = 0; i < nets.size(); ++i) {
      os << "adam_net " << kSubnetNames[i] << '\n';
      write_moments(os, opt.first_moments[i]);
      write_moments(os, opt.second_moments[i]);
    }
    os << "adam_b0 " << format_double(opt.b0_first) << ' '
       << format_double(opt.b0_second) << '\n';
  }
  os << "end\n";
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(msg("cannot open '", path, "' for writing"));
  save_checkpoint(ckpt, os);
  os.flush();
  if (!os) throw IoError(msg("failed writing checkpoint to '", path, "'"));
}

Checkpoint load_checkpoint(std::istream& is, const std::string& origin) {
  Reader reader(is, origin);

  {
    std::string line;
    if (!std::getline(is, line)) {
      throw IoError(msg(origin, ": corrupt checkpoint: empty file"));
    }
    if (line != kHeader) {
      throw IoError(msg(origin, ": not a compatible checkpoint (header '",
                        line, "', expected '", kHeader, "')"));
    }
  }

  Checkpoint ckpt;
  ModelConfig& config = ckpt.model.config;
  config.input_dim = static_cast<int>(reader.value_long("d"));
  config.pair_embed_dim =
      static_cast<int>(reader.value_long("pair_embed_dim"));
  config.encoder_sizes = reader.value_ints("encoder_sizes");
  config.encoder_acts = reader.value_acts("encoder_acts");
  config.branch_sizes = reader.value_ints("branch_sizes");
  config.branch_acts = reader.value_acts("branch_acts");
  config.trunk_sizes = reader.value_ints("trunk_sizes");
  config.trunk_acts = reader.value_acts("trunk_acts");
  config.readout_width = static_cast<int>(reader.value_long("readout_width"));
  ckpt.seed = reader.value_u64("seed");
  ckpt.iterations = reader.value_long("iterations");
  ckpt.final_loss = reader.value_double("final_loss");

  const auto nets = subnets(ckpt.model);
  for (std::size_t i = 0; i < nets.size(); ++i) {
    *nets[i] = read_net(reader, kSubnetNames[i]);
  }
  ckpt.model.b0 = reader.value_double("b0");

  try {
    ckpt.model.validate();
  } catch (const Error& e) {
    throw IoError(msg(origin, ": corrupt checkpoint: ", e.what()));
  }

  const long has_optimizer = reader.value_long("optimizer");
  if (has_optimizer != 0 && has_optimizer != 1) {
    throw IoError(msg(origin, ": corrupt checkpoint: bad optimizer flag"));
  }
  if (has_optimizer == 1) {
    OptimizerSnapshot opt;
    opt.steps = reader.value_long("adam_steps");
    for (std::size_t i = 0; i < nets.size(); ++i) {
      const auto header = reader.expect("adam_net");
      reader.require(header.size() == 2 && header[1] == kSubnetNames[i],
                     "adam_net");
      opt.first_moments.push_back(read_moments(reader, *nets[i]));
      opt.second_moments.push_back(read_moments(reader, *nets[i]));
    }
    const auto b0_tokens = reader.expect("adam_b0");
    reader.require(b0_tokens.size() == 3, "adam_b0");
    opt.b0_first = std::strtod(b0_tokens[1].c_str(), nullptr);
    opt.b0_second = std::strtod(b0_tokens[2].c_str(), nullptr);
    ckpt.optimizer = std::move(opt);
  }

  reader.expect("end");
  return ckpt;
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(msg("cannot open checkpoint '", path, "'"));
  return load_checkpoint(is, path);
}

std::uint64_t fnv1a_file_hash(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(msg("cannot open '", path, "' for hashing"));
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    const std::streamsize got = is.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
    if (!is) break;
  }
  return hash;
}

}  // namespace deeposets
