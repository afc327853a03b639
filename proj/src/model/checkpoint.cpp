#include "seqpt/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "seqpt/error.hpp"

namespace seqpt::model {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'E', 'Q', 'P', 'T', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put(std::ostream& out, U value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(U));
}

template <typename U>
U get(std::istream& in) {
  U value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(U));
  if (!in) throw FormatError("truncated checkpoint");
  return value;
}

void put_string(std::ostream& out, const std::string& s, bool wide) {
  if (wide) {
    put<std::uint64_t>(out, s.size());
  } else {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  }
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in, bool wide) {
  const std::uint64_t n = wide ? get<std::uint64_t>(in) : get<std::uint32_t>(in);
  if (n > (1ULL << 32)) throw FormatError("implausible string length in checkpoint");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw FormatError("truncated checkpoint");
  return s;
}

template <typename T>
struct NamedTensor {
  std::string name;
  Matrix<T>* value;
};

template <typename T>
std::vector<NamedTensor<T>> checkpoint_tensors(Seq2SeqParams<T>& params, OptimizerState<T>& opt) {
  std::vector<NamedTensor<T>> out;
  for (auto& t : tensors(params)) out.push_back({t.name, t.value});
  for (auto& t : tensors(opt.first_moment)) out.push_back({"adam.m/" + t.name, t.value});
  for (auto& t : tensors(opt.second_moment)) out.push_back({"adam.v/" + t.name, t.value});
  return out;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::string& path, const Trainer<T>& trainer,
                     const nlohmann::json& metadata) {
  nlohmann::json header;
  header["model_config"] = trainer.config();
  header["optimizer"] = {{"config", trainer.optimizer().config},
                         {"encoder_step", trainer.optimizer().encoder_step},
                         {"decoder_step", trainer.optimizer().decoder_step}};
  header["rng_state"] = trainer.rng().state();
  header["steps"] = trainer.steps();
  header["metadata"] = metadata;

  auto copy = trainer;
  auto list = checkpoint_tensors(copy.params(), copy.optimizer());

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, sizeof(T));
  put_string(out, header.dump(), true);
  put<std::uint64_t>(out, list.size());
  for (const auto& t : list) {
    put_string(out, t.name, false);
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value->rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.value->cols()));
    out.write(reinterpret_cast<const char*>(t.value->data()),
              static_cast<std::streamsize>(sizeof(T) * static_cast<std::size_t>(t.value->size())));
  }
  if (!out) throw Error("failed writing " + path);
}

template <typename T>
Trainer<T> load_checkpoint(const std::string& path, nlohmann::json* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(path + " is not a checkpoint");
  }
  if (get<std::uint32_t>(in) != kVersion) throw FormatError("unsupported checkpoint version");
  if (get<std::uint32_t>(in) != sizeof(T)) throw FormatError("checkpoint scalar type mismatch");
  const auto header = nlohmann::json::parse(get_string(in, true));

  const auto config = header.at("model_config").get<ModelConfig>();
  const auto opt_cfg = header.at("optimizer").at("config").get<OptimizerConfig>();
  Trainer<T> trainer(config, opt_cfg, 0);
  trainer.optimizer().encoder_step = header.at("optimizer").at("encoder_step").get<std::size_t>();
  trainer.optimizer().decoder_step = header.at("optimizer").at("decoder_step").get<std::size_t>();
  trainer.rng().restore(header.at("rng_state").get<std::string>());
  trainer.set_steps(header.at("steps").get<std::size_t>());
  if (metadata != nullptr) *metadata = header.value("metadata", nlohmann::json::object());

  auto list = checkpoint_tensors(trainer.params(), trainer.optimizer());
  if (get<std::uint64_t>(in) != list.size()) throw FormatError("checkpoint tensor count mismatch");
  for (auto& t : list) {
    const std::string name = get_string(in, false);
    if (name != t.name) throw FormatError("expected tensor " + t.name + ", found " + name);
    if (get<std::uint32_t>(in) != 2) throw FormatError("tensor " + name + " is not rank 2");
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    if (rows != static_cast<std::uint64_t>(t.value->rows()) ||
        cols != static_cast<std::uint64_t>(t.value->cols())) {
      throw FormatError("shape mismatch for tensor " + name);
    }
    in.read(reinterpret_cast<char*>(t.value->data()),
            static_cast<std::streamsize>(sizeof(T) * static_cast<std::size_t>(t.value->size())));
    if (!in) throw FormatError("truncated tensor " + name);
  }
  return trainer;
}

template void save_checkpoint(const std::string&, const Trainer<float>&, const nlohmann::json&);
template void save_checkpoint(const std::string&, const Trainer<double>&, const nlohmann::json&);
template Trainer<float> load_checkpoint(const std::string&, nlohmann::json*);
template Trainer<double> load_checkpoint(const std::string&, nlohmann::json*);

}  // namespace seqpt::model
