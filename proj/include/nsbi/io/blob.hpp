#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nsbi/diffcore/tensor.hpp"

namespace nsbi {

/// Self-describing binary container: versioned header, JSON config, named float64 arrays.
struct Blob {
  std::string kind;
  nlohmann::json config;
  std::vector<std::pair<std::string, diff::Tensor>> arrays;

  [[nodiscard]] const diff::Tensor& array(const std::string& name) const;
};

inline constexpr std::uint32_t kBlobVersion = 1;

std::string encode_blob(const Blob& blob);
Blob decode_blob(const std::string& bytes);

void write_blob(const std::string& path, const Blob& blob);
Blob read_blob(const std::string& path);

}  // namespace nsbi

namespace nsbi::diff {
class ParamStore;
}

namespace nsbi {

/// Stores every parameter as an array named "param/<name>".
void append_params(Blob& blob, const diff::ParamStore& store);
void load_params(const Blob& blob, diff::ParamStore& store);

}  // namespace nsbi
