#pragma once

#include <json.hpp>
#include <string>
#include <string_view>

#include "tubekernel/bergman.hpp"
#include "tubekernel/body.hpp"
#include "tubekernel/bounds.hpp"
#include "tubekernel/convex_function.hpp"
#include "tubekernel/errors.hpp"
#include "tubekernel/quadrature.hpp"

namespace tubekernel {

using Json = nlohmann::json;

// Malformed input document. The message carries the location: either
// "source:line:column" for syntax errors or the JSON pointer of the
// offending value.
class SpecError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

// Body spec: {"dim": n, "kind": "hpoly", "normals": [[...]], "offsets": [...]}
//            {"dim": n, "kind": "vpoly", "vertices": [[...]]}
//            {"dim": n, "kind": "pball", "p": number or "inf", "radius": r}
Json to_json(const Body& k);
Body body_from_json(const Json& j, const std::string& path = "");

// Function spec: {"dim": n, "kind": ..., ...}
//   indicator, support:  "body": body spec
//   quadratic:           "matrix": [[...]] (value x.Mx/2)
//   gauge_power:         "body", "p"
//   dilate:              "inner": function spec, "factor": s
//   sum:                 "terms": [function spec, ...]
//   grid:                "axes": [[...]], "values": [...] row-major, null = +inf
Json to_json(const ConvexFunction& phi);
ConvexFunction function_from_json(const Json& j, const std::string& path = "");

Json to_json(const QuadSpec& spec);
Json to_json(const KernelValue& k);
Json to_json(const CheckReport& r);
Json to_json(const std::vector<CheckReport>& reports);
Json to_json(const Constants& c);

// name,subject,relation,lhs,rhs,margin,combined_error,verdict
std::string reports_csv(const std::vector<CheckReport>& reports);

// %.17g, with "inf" / "-inf" / "nan".
std::string format_number(double v);

// Parses text; syntax errors become SpecError("source:line:column: ...").
Json parse_json_text(std::string_view text, const std::string& source);
Json load_json_file(const std::string& path);
ConvexFunction load_function_file(const std::string& path);

// 16 hex digits of FNV-1a over the compact serialization.
std::string digest(const Json& j);
std::string digest(const ConvexFunction& phi);
std::string digest(const Body& k);

// Pretty serialization with a trailing newline; deterministic.
std::string dump(const Json& j);

}  // namespace tubekernel
