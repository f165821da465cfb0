#include "kbcab/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <ostream>

#include "kbcab/error.hpp"

namespace kbcab {

namespace {

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

void write_f64(std::ostream& out, const std::vector<double>& values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
  } else {
    for (double v : values) {
      auto bits = std::bit_cast<std::uint64_t>(v);
      char buf[8];
      for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
      out.write(buf, 8);
    }
  }
}

void read_f64(std::istream& in, std::vector<double>& values, const char* what) {
  std::vector<unsigned char> buf(values.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(in.gcount()) != buf.size())
    throw FormatError(std::string("checkpoint truncated in ") + what);
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | buf[k * 8 + static_cast<std::size_t>(i)];
    values[k] = std::bit_cast<double>(bits);
    if (!std::isfinite(values[k]))
      throw FormatError(std::string("checkpoint holds a non-finite value in ") + what);
  }
}

}  // namespace

void write_checkpoint(std::ostream& out, const ModelParams& p) {
  nlohmann::ordered_json header;
  header["dim"] = p.dim;
  header["n_entities"] = p.entity_count();
  header["n_relations"] = p.relation_count();
  header["entity_names"] = p.vocab.entity_names();
  header["relation_names"] = p.vocab.relation_names();
  out.write(kCheckpointMagic, kMagicLen);
  out << header.dump() << '\n';
  for (const Matrix* m : {&p.entity_re, &p.entity_im, &p.relation_re, &p.relation_im})
    write_f64(out, m->data());
}

ModelParams read_checkpoint(std::istream& in) {
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (static_cast<std::size_t>(in.gcount()) != kMagicLen ||
      std::memcmp(magic, kCheckpointMagic, kMagicLen) != 0)
    throw FormatError("not a checkpoint: bad magic");

  std::string line;
  if (!std::getline(in, line)) throw FormatError("checkpoint truncated in header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header is not JSON: ") + e.what());
  }

  std::size_t dim = 0, n_ent = 0, n_rel = 0;
  std::vector<std::string> entities, relations;
  try {
    dim = header.at("dim").get<std::size_t>();
    n_ent = header.at("n_entities").get<std::size_t>();
    n_rel = header.at("n_relations").get<std::size_t>();
    entities = header.at("entity_names").get<std::vector<std::string>>();
    relations = header.at("relation_names").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header field: ") + e.what());
  }
  if (dim == 0) throw FormatError("checkpoint dim must be >= 1");
  if (entities.size() != n_ent)
    throw FormatError("checkpoint header n_entities=" + std::to_string(n_ent) + " but " +
                      std::to_string(entities.size()) + " entity names");
  if (relations.size() != n_rel)
    throw FormatError("checkpoint header n_relations=" + std::to_string(n_rel) + " but " +
                      std::to_string(relations.size()) + " relation names");

  ModelParams p;
  p.vocab = Vocabulary::from_names(std::move(entities), std::move(relations));
  p.dim = dim;
  static_cast<EmbeddingTables&>(p) = EmbeddingTables(n_ent, n_rel, dim);
  read_f64(in, p.entity_re.data(), "entity_re");
  read_f64(in, p.entity_im.data(), "entity_im");
  read_f64(in, p.relation_re.data(), "relation_re");
  read_f64(in, p.relation_im.data(), "relation_im");
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("checkpoint has trailing bytes after the relation tables");
  return p;
}

void save_checkpoint(const ModelParams& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write checkpoint " + path);
  write_checkpoint(out, p);
  if (!out) throw FormatError("write failed for checkpoint " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace kbcab
