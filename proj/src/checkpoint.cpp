#include "maner/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "maner/sha256.hpp"

namespace maner {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'N', 'E', 'R', 'C', 'K', 'P'};

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

void put_f32(std::string& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, sizeof(bits));
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const std::string& data, std::string path)
      : data_(data), path_(std::move(path)) {}

  uint32_t u32(const char* field) {
    need(4, field);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<uint8_t>(data_[pos_ + static_cast<size_t>(i)]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  uint64_t u64(const char* field) {
    need(8, field);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(static_cast<uint8_t>(data_[pos_ + static_cast<size_t>(i)]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  float f32(const char* field) {
    const uint32_t bits = u32(field);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
  }

  std::string bytes(size_t n, const char* field) {
    need(n, field);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(size_t n, const char* field) {
    if (pos_ + n > data_.size()) {
      throw IoError(path_ + ": truncated checkpoint while reading " + field);
    }
  }

  size_t pos() const { return pos_; }

 private:
  const std::string& data_;
  std::string path_;
  size_t pos_ = 0;
};

nlohmann::json model_config_json(const ModelConfig& c) {
  return nlohmann::json{{"layers", c.layers},       {"dim", c.dim},
                        {"heads", c.heads},         {"ff_dim", c.ff_dim},
                        {"max_seq_len", c.max_seq_len}, {"vocab_size", c.vocab_size},
                        {"dropout", c.dropout},     {"num_labels", c.num_labels}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.layers = j.at("layers").get<int>();
  c.dim = j.at("dim").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ff_dim = j.at("ff_dim").get<int>();
  c.max_seq_len = j.at("max_seq_len").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.num_labels = j.at("num_labels").get<int>();
  return c;
}

nlohmann::json mlm_config_json(const MlmConfig& c) {
  return nlohmann::json{{"p_mlm", c.p_mlm},
                        {"mask_fraction", c.mask_fraction},
                        {"random_fraction", c.random_fraction},
                        {"keep_fraction", c.keep_fraction},
                        {"epochs", c.epochs},
                        {"lr", c.lr},
                        {"batch", c.batch},
                        {"seed", c.seed}};
}

MlmConfig mlm_config_from_json(const nlohmann::json& j) {
  MlmConfig c;
  c.p_mlm = j.at("p_mlm").get<double>();
  c.mask_fraction = j.at("mask_fraction").get<double>();
  c.random_fraction = j.at("random_fraction").get<double>();
  c.keep_fraction = j.at("keep_fraction").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.lr = j.at("lr").get<double>();
  c.batch = j.at("batch").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

}  // namespace

std::string serialize_checkpoint(Checkpoint& ckpt) {
  nlohmann::json header;
  header["model_config"] = model_config_json(ckpt.params.config);
  header["vocab_tokens"] = ckpt.vocab.tokens();
  header["mask_pretrained"] = ckpt.vocab.marker_pretrained(Marker::mask);
  header["rand_pretrained"] = ckpt.vocab.marker_pretrained(Marker::rand);
  header["coverage"] = ckpt.coverage;
  header["mlm_config"] = mlm_config_json(ckpt.mlm_config);
  header["seed"] = ckpt.seed;
  header["config_text"] = ckpt.config_text;
  header["config_digest"] = ckpt.config_digest;
  // nlohmann::json orders keys lexicographically: dump() is canonical
  const std::string header_text = header.dump();

  std::string out;
  out.append(kMagic, sizeof(kMagic));
  put_u32(out, Checkpoint::kFormatVersion);
  put_u64(out, header_text.size());
  out += header_text;

  auto named = ckpt.params.named_params();
  put_u32(out, static_cast<uint32_t>(named.size()));
  for (const auto& [name, array] : named) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<uint32_t>(array->shape.rank()));
    for (int r = 0; r < array->shape.rank(); ++r) {
      put_u64(out, array->shape.dim(r));
    }
    for (const float f : array->data) {
      put_f32(out, f);
    }
  }
  return out;
}

std::string checkpoint_digest(Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  return Sha256::hex_digest(bytes.data(), bytes.size());
}

void save_checkpoint(const std::string& path, Checkpoint& ckpt) {
  const std::string body = serialize_checkpoint(ckpt);
  Sha256 hasher;
  hasher.update(body.data(), body.size());
  const auto digest = hasher.finish();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  out.write(reinterpret_cast<const char*>(digest.data()),
            static_cast<std::streamsize>(digest.size()));
  if (!out) {
    throw IoError("failed writing checkpoint to '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open checkpoint '" + path + "'");
  }
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < sizeof(kMagic) + 4 + 32) {
    throw IoError(path + ": truncated checkpoint while reading magic");
  }

  // integrity first: trailing sha256 over everything before it
  const std::string body = data.substr(0, data.size() - 32);
  Sha256 hasher;
  hasher.update(body.data(), body.size());
  const auto digest = hasher.finish();
  if (std::memcmp(digest.data(), data.data() + body.size(), 32) != 0) {
    throw IoError(path + ": checkpoint digest mismatch (corrupt or truncated file)");
  }

  Reader r(body, path);
  if (r.bytes(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic))) {
    throw IoError(path + ": not a checkpoint file (bad magic)");
  }
  const uint32_t version = r.u32("format version");
  if (version != Checkpoint::kFormatVersion) {
    throw IoError(path + ": unsupported checkpoint format version " + std::to_string(version) +
                  " (this build reads version " + std::to_string(Checkpoint::kFormatVersion) +
                  ")");
  }
  const uint64_t header_len = r.u64("header length");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.bytes(header_len, "header"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": bad checkpoint header: " + e.what());
  }

  Checkpoint ckpt;
  try {
    ckpt.params = allocate_params<float>(model_config_from_json(header.at("model_config")));
    ckpt.vocab = Vocab::from_tokens(header.at("vocab_tokens").get<std::vector<std::string>>(),
                                    header.at("mask_pretrained").get<bool>(),
                                    header.at("rand_pretrained").get<bool>());
    ckpt.coverage = header.at("coverage").get<std::vector<std::string>>();
    ckpt.mlm_config = mlm_config_from_json(header.at("mlm_config"));
    ckpt.seed = header.at("seed").get<uint64_t>();
    ckpt.config_text = header.at("config_text").get<std::string>();
    ckpt.config_digest = header.at("config_digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": checkpoint header field error: " + e.what());
  }
  if (ckpt.vocab.size() != ckpt.params.config.vocab_size) {
    throw IoError(path + ": header field vocab_tokens has " + std::to_string(ckpt.vocab.size()) +
                  " entries but vocab_size is " + std::to_string(ckpt.params.config.vocab_size));
  }

  const uint32_t n_blocks = r.u32("block count");
  auto named = ckpt.params.named_params();
  if (n_blocks != named.size()) {
    throw IoError(path + ": expected " + std::to_string(named.size()) +
                  " parameter blocks, found " + std::to_string(n_blocks));
  }
  for (auto& [name, array] : named) {
    const uint32_t name_len = r.u32("block name length");
    const std::string block_name = r.bytes(name_len, "block name");
    if (block_name != name) {
      throw IoError(path + ": parameter block '" + block_name + "' where '" + name +
                    "' was expected");
    }
    const uint32_t rank = r.u32((name + " rank").c_str());
    Shape expect = array->shape;
    if (rank != static_cast<uint32_t>(expect.rank())) {
      throw IoError(path + ": block '" + name + "' has rank " + std::to_string(rank) +
                    ", expected " + std::to_string(expect.rank()));
    }
    for (uint32_t d = 0; d < rank; ++d) {
      const uint64_t dim = r.u64((name + " shape").c_str());
      if (dim != expect.dim(static_cast<int>(d))) {
        throw IoError(path + ": block '" + name + "' dimension " + std::to_string(d) + " is " +
                      std::to_string(dim) + ", expected " +
                      std::to_string(expect.dim(static_cast<int>(d))));
      }
    }
    for (float& f : array->data) {
      f = r.f32((name + " data").c_str());
    }
  }
  if (r.pos() != body.size()) {
    throw IoError(path + ": trailing bytes after the last parameter block");
  }
  return ckpt;
}

}  // namespace maner
