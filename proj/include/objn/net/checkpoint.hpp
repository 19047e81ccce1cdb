#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "objn/core/error.hpp"
#include "objn/core/jsonio.hpp"
#include "objn/net/config.hpp"
#include "objn/net/model.hpp"

namespace objn {

// Checkpoint file: 8-byte magic, u32 format version, u64 header length, a
// canonical JSON header (config, free-form metadata, tensor directory), then
// the raw little-endian parameter data in directory order.
inline constexpr char kCkptMagic[8] = {'O', 'B', 'J', 'N', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCkptVersion = 1;

template <class S>
const char* ckpt_dtype() {
  if constexpr (sizeof(S) == 4)
    return "f32";
  else
    return "f64";
}

template <class S>
struct Checkpoint {
  NetConfig config;
  Json metadata;
  std::unique_ptr<R21UNet<S>> model;
};

template <class S>
void save_checkpoint(const std::filesystem::path& path, R21UNet<S>& model,
                     const Json& metadata) {
  const std::vector<Param<S>*> params = model.params();
  Json dir = Json::array();
  std::uint64_t offset = 0;
  for (const Param<S>* p : params) {
    dir.push_back({{"name", p->name},
                   {"shape", p->shape},
                   {"offset", offset},
                   {"count", p->w.size()}});
    offset += p->w.size();
  }
  Json header = {{"format", "objn-checkpoint"},
                 {"format_version", kCkptVersion},
                 {"dtype", ckpt_dtype<S>()},
                 {"config", net_config_to_json(model.config())},
                 {"metadata", metadata},
                 {"tensors", dir}};
  const std::string head = canonical_dump(header);

  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out.write(kCkptMagic, sizeof(kCkptMagic));
    const std::uint32_t ver = kCkptVersion;
    const std::uint64_t hlen = head.size();
    out.write(reinterpret_cast<const char*>(&ver), sizeof(ver));
    out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
    out.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const Param<S>* p : params)
      out.write(reinterpret_cast<const char*>(p->w.data()),
                static_cast<std::streamsize>(p->w.size() * sizeof(S)));
    if (!out) throw DataError("short write on checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

template <class S>
Checkpoint<S> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint not found: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
    throw DataError("not a checkpoint file: " + path.string());
  std::uint32_t ver = 0;
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&ver), sizeof(ver));
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || ver != kCkptVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(ver) + " in " +
                    path.string());
  std::string head(hlen, '\0');
  in.read(head.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw DataError("truncated checkpoint header in " + path.string());

  Json header;
  try {
    header = Json::parse(head);
  } catch (const Json::parse_error& e) {
    throw DataError("bad checkpoint header in " + path.string() + ": " + e.what());
  }
  if (json_get_or<std::string>(header, "dtype", "") != ckpt_dtype<S>())
    throw DataError("checkpoint dtype " + json_get_or<std::string>(header, "dtype", "?") +
                    " does not match requested scalar in " + path.string());

  Checkpoint<S> ck;
  ck.config = net_config_from_json(header.at("config"));
  ck.metadata = header.contains("metadata") ? header.at("metadata") : Json::object();
  ck.model = std::make_unique<R21UNet<S>>(ck.config, 0);

  std::vector<Param<S>*> params = ck.model->params();
  const Json& dir = header.at("tensors");
  if (dir.size() != params.size())
    throw DataError("checkpoint has " + std::to_string(dir.size()) + " tensors, model expects " +
                    std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Json& ent = dir[i];
    Param<S>* p = params[i];
    if (json_get<std::string>(ent, "name") != p->name)
      throw DataError("checkpoint tensor " + json_get<std::string>(ent, "name") +
                      " does not match model parameter " + p->name);
    const auto shape = ent.at("shape").get<std::vector<int>>();
    if (shape != p->shape)
      throw DataError("checkpoint shape mismatch for " + p->name);
    if (ent.at("count").get<std::size_t>() != p->w.size())
      throw DataError("checkpoint element count mismatch for " + p->name);
    in.read(reinterpret_cast<char*>(p->w.data()),
            static_cast<std::streamsize>(p->w.size() * sizeof(S)));
    if (!in) throw DataError("truncated checkpoint data at " + p->name + " in " + path.string());
  }
  return ck;
}

}  // namespace objn
