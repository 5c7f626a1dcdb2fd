#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mosbench/model.hpp"

namespace mosbench {

/// Parameters plus the judge roster they were trained against.
template <typename Scalar>
struct Checkpoint {
  ModelParams<Scalar> params;
  std::vector<std::string> roster;
};

/// Self-describing binary encoding: magic, format version, scalar width,
/// architecture, active flags, roster, then every named tensor (parameters
/// followed by normalization statistics) and a trailing FNV-1a checksum.
/// Tensor data is stored verbatim, so decode(encode(x)) is bit-exact.
template <typename Scalar>
std::string encode_checkpoint(const Checkpoint<Scalar>& checkpoint);

/// Throws ParseError on a malformed, truncated or mismatched encoding.
template <typename Scalar>
Checkpoint<Scalar> decode_checkpoint(const std::string& bytes);

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<Scalar>& checkpoint);

/// Throws IoError if the file cannot be read, ParseError if it is invalid.
template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path);

}  // namespace mosbench
