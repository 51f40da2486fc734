// Copyright 2026 The crowdpipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "crowdpipe/transport/store.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <sstream>

#include "crowdpipe/core/errors.hpp"
#include "crowdpipe/transport/digest.hpp"

namespace crowdpipe {

namespace fs = std::filesystem;

FsPayloadStore::FsPayloadStore(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) {
    throw Error(Errc::kStoreWriteError,
                "cannot create store dir " + dir_.string() + ": " + ec.message());
  }
}

fs::path FsPayloadStore::path_for(const std::string& key) const {
  return dir_ / (key + ".bin");
}

std::string FsPayloadStore::put(std::string_view bytes) {
  static std::atomic<unsigned long> counter{0};
  std::string key = sha256_hex(bytes);
  fs::path target = path_for(key);
  if (fs::exists(target)) return key;

  fs::path tmp = dir_ / (key + ".tmp." + std::to_string(::getpid()) + "." +
                         std::to_string(counter++));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw Error(Errc::kStoreWriteError, "write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::kStoreWriteError, "rename failed: " + target.string());
  }
  return key;
}

std::string FsPayloadStore::get(const std::string& key) const {
  if (!is_sha256_hex(key)) throw Error(Errc::kMissingKey, "bad key " + key);
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) throw Error(Errc::kMissingKey, key);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string bytes = buf.str();
  if (sha256_hex(bytes) != key) throw Error(Errc::kHashMismatch, key);
  return bytes;
}

bool FsPayloadStore::contains(const std::string& key) const {
  return is_sha256_hex(key) && fs::exists(path_for(key));
}

}  // namespace crowdpipe
