#pragma once

#include <iosfwd>
#include <string>

#include "kbcab/complex_model.hpp"

namespace kbcab {

// Layout: the 6 magic bytes "CKBC1\n", one JSON header line
// {dim, n_entities, n_relations, entity_names, relation_names}, then the
// entity_re, entity_im, relation_re, relation_im tables as row-major
// little-endian float64.
inline constexpr char kCheckpointMagic[] = "CKBC1\n";

void write_checkpoint(std::ostream& out, const ModelParams& p);
// Throws FormatError on bad magic, malformed header, inconsistent counts,
// truncated or trailing data.
ModelParams read_checkpoint(std::istream& in);

void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

}  // namespace kbcab
