#pragma once

#include <string>

#include "adco/encoder.hpp"
#include "adco/matrix.hpp"

namespace adco {

// Text checkpoint container shared by the encoder and the negative bank.
// Layout (whitespace-separated, doubles printed shortest-round-trip):
//
//   adco-checkpoint v1
//   kind <encoder|bank>
//   dims <n> <d_0> ... <d_{n-1}>
//   tensor <name> <rows> <cols>
//   <rows lines of cols doubles>
//   ... more tensors ...
//
// An encoder stores W0 b0 W1 b1 ... in layer order; a bank stores one
// tensor N of shape K x d (dims line is "2 K d"). Round-trips exactly.
void save_encoder(const MlpEncoder& encoder, const std::string& path);
MlpEncoder load_encoder(const std::string& path);

void save_bank(const Matrix& bank, const std::string& path);
Matrix load_bank(const std::string& path);

}  // namespace adco
