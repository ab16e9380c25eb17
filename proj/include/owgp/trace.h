#pragma once

#include <string>

#include "owgp/executive.h"

namespace owgp {

// One JSON object per line: {step, kind, payload, belief, stack_depth, seed}.
// Key order and number formatting are deterministic so identical runs give
// byte-identical files.
void emit_trace(const Trace& trace, const std::string& path);

std::string trace_record_to_json(const TraceRecord& rec);

}  // namespace owgp
