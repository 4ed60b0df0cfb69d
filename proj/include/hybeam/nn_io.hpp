// SPDX-License-Identifier: Apache-2.0
//
// HBNN model container: magic "HBNN", u32 version, length-prefixed layer
// descriptor list, metadata block (input scale, init seed, training counters),
// then little-endian float64 parameter arrays in layer order (weights, bias).
// Round-trips are bit-exact.
#ifndef HYBEAM_NN_IO_HPP
#define HYBEAM_NN_IO_HPP

#include <iosfwd>
#include <string>

#include "hybeam/nn.hpp"

namespace hybeam::nn {

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const Network& net, std::ostream& os);
void save_model(const Network& net, const std::string& path);

Network load_model(std::istream& is);
Network load_model(const std::string& path);

}  // namespace hybeam::nn

#endif  // HYBEAM_NN_IO_HPP
