// Copyright (c) 2026 the silt authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace silt {

/// Four-field network description: depth, skip links, input-cascade points,
/// residual blocks. Text form:
///   N=<int>; S={(i,j),...}; C={c,...}; R=[(l,b),... | k]
struct ResidualBlockSpec {
    int start = 0;   // layer l; block spans layers l+1 .. l+b
    int length = 0;  // b
    friend bool operator==(const ResidualBlockSpec&, const ResidualBlockSpec&) = default;
};

struct NetworkSpec {
    int depth = 0;
    std::vector<std::pair<int, int>> skips;
    std::vector<int> cascades;
    bool residual_shorthand = false;  // R=[k]: k blocks at a default position
    int residual_count = 0;
    std::vector<ResidualBlockSpec> residual_blocks;

    int residual_block_count() const {
        return residual_shorthand ? residual_count : static_cast<int>(residual_blocks.size());
    }
    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

struct SpecSyntaxError : std::runtime_error {
    int line, column;
    SpecSyntaxError(const std::string& msg, int line_, int col_)
        : std::runtime_error(msg + " at line " + std::to_string(line_) + ", column " +
                             std::to_string(col_)),
          line(line_),
          column(col_) {}
};

/// Syntax only; use validate_spec for semantic checks.
NetworkSpec parse_network_spec(std::string_view text);

/// Returns one message per violated invariant; empty means valid.
std::vector<std::string> validate_spec(const NetworkSpec& spec);

std::string to_string(const NetworkSpec& spec);

}  // namespace silt
