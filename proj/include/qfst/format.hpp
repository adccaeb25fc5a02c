#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "qfst/machine.hpp"

namespace qfst {

/// Error while reading machine-definition text. Lines are 1-based;
/// column is 1-based where known and 0 when the error covers a whole line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, int line, int column = 0);
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Reads the `.qfst` machine-definition format:
///
///   [machine]                     required, must come first
///   name = f1
///   mode = quantum                or stochastic
///   states = s0 A1 ...
///   initial = s0
///   accept = qacc                 may be empty
///   reject = R qrej ...
///   input_alphabet = a b c
///   output_alphabet = a b
///
///   [unitary <symbol>]            one matrix, split by the halting partition
///   complete = auto               optional: Gram-Schmidt completion of
///                                 unspecified columns (quantum only);
///                                 without it they default to identity columns
///   <target> <- <source> : <amplitude-expr>
///
///   [kraus <symbol> outcome=<continue|accept|reject> elem=<k>]
///   <target> <- <source> : <amplitude-expr>
///
///   [output]                      optional
///   <state> <symbol> -> <string|_>    `_` denotes the empty string
///
/// `#` starts a comment; blank lines are ignored; the reserved markers `^`
/// and `$` are spelled literally in section headers. Numeric validation
/// (completeness, stochasticity) is validate_machine's job, not the parser's.
MachineSpec parse_machine_text(std::string_view text);

/// Canonical form: fixed section order (left marker, input alphabet in
/// declaration order, right marker), entries sorted by (source, target),
/// amplitudes rendered as their defining expressions when known and as
/// 17-significant-digit decimals otherwise. parse(serialize(spec)) rebuilds
/// the machine with all matrices equal within 1e-12, and serializing again
/// reproduces the text byte for byte.
std::string serialize_machine(const MachineSpec& spec);

}  // namespace qfst
