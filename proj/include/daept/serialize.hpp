#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "daept/network.hpp"

namespace daept {

// Text format, one item per line:
//
//   DAEPT v1
//   meta <key> <value>                        (zero or more)
//   network <input_dim> <layer_count>
//   dense <in> <out> <activation> <trainable>
//   W <in*out values, row-major>
//   b <out values>
//   dropout <rate> <trainable>
//   batchnorm <features> <epsilon> <momentum> <trainable>
//   gamma|beta|running_mean|running_var <values>
//   end
//
// Reals are written with 17 significant digits, which round-trips doubles.

using Metadata = std::map<std::string, std::string>;

struct NetworkFile {
  Network network;
  Metadata meta;
};

std::string format_real(double v);

void write_network(std::ostream& out, const Network& net, const Metadata& meta = {});
NetworkFile read_network(std::istream& in);

void save_network(const std::filesystem::path& path, const Network& net,
                  const Metadata& meta = {});
NetworkFile load_network(const std::filesystem::path& path);

}  // namespace daept
