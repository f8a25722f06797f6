// cli.hpp -- command dispatch for the pfn tool.
//
// Exit codes: 0 success/valid, 2 invalid process (witness printed),
// 3 refusal (bad usage, malformed input, bound exceeded), 4 internal
// integrity failure (oracle disagreement; must never happen).

#pragma once

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "pfn/io.hpp"

namespace pfn {

namespace cli_detail {

inline std::string format_tuple(const StateTuple& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ", " : "") + std::to_string(t[i]);
  return s + ")";
}

inline std::uint64_t brute_bound_from_env() {
  if (const char* env = std::getenv("PFN_BRUTE_BOUND")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
    throw Error("PFN_BRUTE_BOUND must be a positive integer, got '" + std::string(env) + "'");
  }
  return default_brute_bound;
}

inline ProcessTable load_table(const std::string& path) {
  return parse_pfn(read_file(path), path).table;
}

inline void print_witness(const Witness& witness, std::ostream& out) {
  out << "witness operations:\n";
  for (const auto& op : witness.operations.operations) {
    out << "  f " << op.region + 1 << " :";
    for (int v : op.values) out << " " << v;
    out << "\n";
  }
  out << "witness fixed points (" << witness.fixed_points.size() << "):\n";
  for (const auto& fp : witness.fixed_points) out << "  " << format_tuple(fp) << "\n";
  if (witness.pair) {
    const auto& pair = *witness.pair;
    out << "two-way signalling between regions " << pair.region_l + 1 << " and "
        << pair.region_j + 1;
    if (!pair.frozen_regions.empty()) {
      out << " with";
      for (std::size_t k = 0; k < pair.frozen_regions.size(); ++k)
        out << " x_" << pair.frozen_regions[k] + 1 << "=" << pair.frozen_values[k];
    }
    out << "\n";
  }
}

// f_i from a spec fragment: const0|const1|id|not (binary only) or an
// explicit digit table like 01 or 0.1.2.
inline LocalOperationTable parse_op_spec(const ProcessShape& shape, int region,
                                         const std::string& body) {
  const int in = shape.in_sizes[static_cast<std::size_t>(region)];
  const int out = shape.out_sizes[static_cast<std::size_t>(region)];
  LocalOperationTable op;
  op.region = region;
  const bool binary = in == 2 && out == 2;
  if (body == "const0" || body == "const1" || body == "id" || body == "not") {
    if (!binary)
      throw Error("operation '" + body + "' is shorthand for binary alphabets; region " +
                  std::to_string(region + 1) + " needs an explicit table");
    if (body == "const0") op.values = {0, 0};
    if (body == "const1") op.values = {1, 1};
    if (body == "id") op.values = {0, 1};
    if (body == "not") op.values = {1, 0};
    return op;
  }
  if (body.find('.') != std::string::npos) {
    std::size_t start = 0;
    while (start <= body.size()) {
      const std::size_t dot = body.find('.', start);
      const std::string part = body.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
        throw Error("bad operation table entry '" + part + "' for region " +
                    std::to_string(region + 1));
      op.values.push_back(std::stoi(part));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
  } else {
    for (char c : body) {
      if (c < '0' || c > '9')
        throw Error("bad operation spec '" + body + "' for region " + std::to_string(region + 1));
      op.values.push_back(c - '0');
    }
  }
  if (op.values.size() != static_cast<std::size_t>(in))
    throw Error("operation table for region " + std::to_string(region + 1) + " has " +
                std::to_string(op.values.size()) + " entries, expected " + std::to_string(in));
  for (int v : op.values)
    if (v < 0 || v >= out)
      throw Error("operation value " + std::to_string(v) + " out of range [0," +
                  std::to_string(out) + ") for region " + std::to_string(region + 1));
  return op;
}

inline OperationTuple parse_ops_spec(const ProcessShape& shape, const std::string& spec) {
  const int n = shape.regions();
  std::vector<std::optional<LocalOperationTable>> slots(static_cast<std::size_t>(n));
  std::size_t start = 0;
  while (start < spec.size()) {
    std::size_t comma = spec.find(',', start);
    const std::string item =
        spec.substr(start, comma == std::string::npos ? comma : comma - start);
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw Error("bad --ops item '" + item + "': expected REGION:OPERATION");
    const std::string region_text = item.substr(0, colon);
    if (region_text.empty() || region_text.find_first_not_of("0123456789") != std::string::npos)
      throw Error("bad region '" + region_text + "' in --ops");
    const int region = std::stoi(region_text);
    if (region < 1 || region > n)
      throw Error("region " + region_text + " out of range 1.." + std::to_string(n));
    if (slots[static_cast<std::size_t>(region - 1)])
      throw Error("region " + region_text + " specified twice in --ops");
    slots[static_cast<std::size_t>(region - 1)] =
        parse_op_spec(shape, region - 1, item.substr(colon + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  OperationTuple f;
  for (int i = 0; i < n; ++i) {
    if (!slots[static_cast<std::size_t>(i)])
      throw Error("--ops is missing region " + std::to_string(i + 1));
    f.operations.push_back(std::move(*slots[static_cast<std::size_t>(i)]));
  }
  return f;
}

struct ValidateOptions {
  std::string file;
  std::string oracle = "pairwise";
};

inline int run_validate(const ValidateOptions& opt, std::ostream& out, std::ostream& err) {
  const ProcessTable w = load_table(opt.file);
  const std::uint64_t bound = brute_bound_from_env();

  std::vector<Verdict> verdicts;
  auto run_one = [&](const std::string& name) -> std::optional<Verdict> {
    if (name == "brute") {
      if (opt.oracle == "all") {
        // Inside `all`, a refused brute run is reported and skipped; the
        // other two oracles still decide.
        try {
          return brute_force_validate(w, bound);
        } catch (const BoundError& e) {
          err << "brute: refused (" << e.what() << ")\n";
          return std::nullopt;
        }
      }
      return brute_force_validate(w, bound);
    }
    if (name == "pairwise") return pairwise_validate(w);
    if (name == "recursive") return recursive_validate(w);
    throw Error("unknown oracle '" + name + "'");
  };

  std::vector<std::string> names;
  if (opt.oracle == "all")
    names = {"brute", "pairwise", "recursive"};
  else
    names = {opt.oracle};
  for (const auto& name : names) {
    if (auto v = run_one(name)) {
      out << name << ": " << (v->valid ? "valid" : "invalid") << "\n";
      verdicts.push_back(std::move(*v));
    }
  }

  for (std::size_t k = 1; k < verdicts.size(); ++k)
    if (verdicts[k].valid != verdicts[0].valid) {
      err << "internal oracle disagreement\n";
      return 4;
    }
  if (verdicts.front().valid) return 0;
  for (const auto& v : verdicts)
    if (v.witness) {
      print_witness(*v.witness, out);
      break;
    }
  return 2;
}

struct SignalOptions {
  std::string file;
  std::string vary;
};

inline int run_signal(const SignalOptions& opt, std::ostream& out) {
  const ProcessTable w = load_table(opt.file);
  const std::size_t comma = opt.vary.find(',');
  if (comma == std::string::npos) throw Error("--vary expects two regions, e.g. --vary 3,4");
  const int l = std::stoi(opt.vary.substr(0, comma));
  const int j = std::stoi(opt.vary.substr(comma + 1));
  if (l < 1 || j < 1 || l > w.regions() || j > w.regions() || l == j)
    throw Error("--vary regions out of range");
  const Verdict verdict = pairwise_validate(w);
  if (!verdict.valid)
    throw InvalidProcessError("signal: '" + opt.file + "' is not a valid process function");
  out << render_signalling_table(signalling_table(w, l - 1, j - 1));
  return 0;
}

struct SimulateOptions {
  std::string file;
  std::string ops;
};

inline int run_simulate(const SimulateOptions& opt, std::ostream& out) {
  const ProcessTable w = load_table(opt.file);
  const OperationTuple f = parse_ops_spec(w.shape(), opt.ops);
  const StateTuple a = simulate(w, f, brute_bound_from_env());
  out << "a* = " << format_tuple(a) << "\n";
  out << "x* = " << format_tuple(outputs(f, a)) << "\n";
  return 0;
}

struct EnumerateOptions {
  int regions = 0;
  bool binary = false;
  int shards = 1;
  int shard = 0;
  std::string emit = "count";
  std::string output;
};

inline int run_enumerate(const EnumerateOptions& opt, std::ostream& out, std::ostream& err) {
  if (!opt.binary) throw Error("enumerate: only --binary alphabets are supported");
  SearchPlan plan;
  plan.shape = ProcessShape::binary(opt.regions);
  plan.shard_count = opt.shards;
  plan.shard_index = opt.shard;

  int last_bucket = -1;
  auto progress = [&, last_bucket](int shard, double pct, std::uint64_t found) mutable {
    const int bucket = static_cast<int>(pct) / 10;
    if (bucket != last_bucket || pct >= 100.0) {
      last_bucket = bucket;
      err << "shard " << shard << ": explored " << static_cast<int>(pct) << "%, found "
          << found << "\n";
    }
  };

  std::ofstream file_out;
  std::ostream* sink = &out;
  if (!opt.output.empty()) {
    file_out.open(opt.output, std::ios::binary);
    if (!file_out) throw Error("cannot open '" + opt.output + "' for writing");
    sink = &file_out;
  }

  if (opt.emit == "count") {
    const SearchStats stats = enumerate_processes(plan, {}, progress);
    *sink << "count " << stats.emitted << "\n";
  } else if (opt.emit == "pfn") {
    bool first = true;
    enumerate_processes(
        plan,
        [&](const PackedProcess& p) {
          if (!first) *sink << "\n";
          first = false;
          PfnDocument doc;
          doc.table = unpack(p);
          *sink << serialize(doc);
        },
        progress);
  } else if (opt.emit == "classes") {
    write_inventory(enumerate_and_classify(plan, progress), *sink);
  } else {
    throw Error("unknown --emit mode '" + opt.emit + "'");
  }
  if (sink == &file_out && !file_out) throw Error("failed writing to '" + opt.output + "'");
  return 0;
}

struct ClassifyOptions {
  std::vector<std::string> files;
  bool from_stream = false;
  std::string output;
};

inline int run_classify(const ClassifyOptions& opt, std::istream& in, std::ostream& out) {
  ClassifyAccumulator acc;
  auto feed = [&](const std::string& text, const std::string& name) {
    for (const auto& doc : parse_pfn_stream(text, name)) acc.add(doc.table);
  };
  if (opt.from_stream) {
    std::ostringstream ss;
    ss << in.rdbuf();
    feed(ss.str(), "<stdin>");
  }
  for (const auto& path : opt.files) feed(read_file(path), path);
  if (!opt.from_stream && opt.files.empty())
    throw Error("classify: give .pfn files or --from-stream");
  const ClassInventory inv = acc.finish();
  if (opt.output.empty())
    write_inventory(inv, out);
  else
    write_inventory(inv, opt.output);
  return 0;
}

} // namespace cli_detail

/// Parse argv (without the program name) and run one subcommand.
inline int run_command(const std::vector<std::string>& argv, std::istream& in,
                       std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic process functions: validation, signalling analysis,"
               " simulation, enumeration, classification"};
  app.name("pfn");

  cli_detail::ValidateOptions validate_opt;
  auto* validate_cmd =
      app.add_subcommand("validate", "Decide whether a table is a valid process function");
  validate_cmd->add_option("file", validate_opt.file, "input .pfn file")->required();
  validate_cmd->add_option("--oracle", validate_opt.oracle, "brute|pairwise|recursive|all")
      ->check(CLI::IsMember({"brute", "pairwise", "recursive", "all"}));

  cli_detail::SignalOptions signal_opt;
  auto* signal_cmd =
      app.add_subcommand("signal", "Conditional signalling table for a pair of regions");
  signal_cmd->add_option("file", signal_opt.file, "input .pfn file")->required();
  signal_cmd->add_option("--vary", signal_opt.vary, "the two varying regions, e.g. 3,4")
      ->required();

  cli_detail::SimulateOptions simulate_opt;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "Unique consistent history under given operations");
  simulate_cmd->add_option("file", simulate_opt.file, "input .pfn file")->required();
  simulate_cmd
      ->add_option("--ops", simulate_opt.ops,
                   "per-region operations, e.g. 1:const0,2:id,3:not,4:01")
      ->required();

  cli_detail::EnumerateOptions enumerate_opt;
  auto* enumerate_cmd =
      app.add_subcommand("enumerate", "Exhaustively enumerate valid binary processes");
  enumerate_cmd->add_option("-n,--regions", enumerate_opt.regions, "number of regions (1..4)")
      ->required();
  enumerate_cmd->add_flag("--binary", enumerate_opt.binary, "binary alphabets");
  enumerate_cmd->add_option("--shards", enumerate_opt.shards, "total shard count");
  enumerate_cmd->add_option("--shard", enumerate_opt.shard, "this shard's index");
  enumerate_cmd->add_option("--emit", enumerate_opt.emit, "count|pfn|classes");
  enumerate_cmd->add_option("-o,--output", enumerate_opt.output, "write to file");

  cli_detail::ClassifyOptions classify_opt;
  auto* classify_cmd =
      app.add_subcommand("classify", "Group processes into relabelling classes");
  classify_cmd->add_option("files", classify_opt.files, "input .pfn files");
  classify_cmd->add_flag("--from-stream", classify_opt.from_stream, "read .pfn stream on stdin");
  classify_cmd->add_option("-o,--output", classify_opt.output, "write inventory to file");

  try {
    app.parse(std::vector<std::string>(argv.rbegin(), argv.rend()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }

  try {
    if (validate_cmd->parsed()) return cli_detail::run_validate(validate_opt, out, err);
    if (signal_cmd->parsed()) return cli_detail::run_signal(signal_opt, out);
    if (simulate_cmd->parsed()) return cli_detail::run_simulate(simulate_opt, out);
    if (enumerate_cmd->parsed()) return cli_detail::run_enumerate(enumerate_opt, out, err);
    if (classify_cmd->parsed()) return cli_detail::run_classify(classify_opt, in, out);
    err << app.help();
    return 3;
  } catch (const IntegrityError& e) {
    err << "internal integrity error: " << e.what() << "\n";
    return 4;
  } catch (const InvalidProcessError& e) {
    err << "invalid process: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

} // namespace pfn
