#include <fmt/format.h>

#include "htppn/model_io.hpp"

namespace htppn {

namespace {

std::string esc(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

class DotWriter {
 public:
  DotWriter(std::string_view name, std::string input, std::string output)
      : input_(std::move(input)), output_(std::move(output)) {
    out_ += fmt::format("digraph \"{}\" {{\n  rankdir=LR;\n", esc(name));
  }

  std::string finish() {
    out_ += "}\n";
    return std::move(out_);
  }

  // Nodes of one scope; refinables become nested clusters.
  void scope(const SubNet& net, const std::string& prefix, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    for (const auto& p : net.places) {
      const std::string id = prefix + p.id;
      int peripheries = 1;
      if (prefix.empty() && p.id == input_) peripheries = 2;
      if (prefix.empty() && p.id == output_) peripheries = 3;
      out_ += fmt::format("{}\"{}\" [shape=ellipse, label=\"{}\"{}];\n", pad, esc(id), esc(p.id),
                          peripheries > 1 ? fmt::format(", peripheries={}", peripheries) : "");
    }
    for (const auto& t : net.transitions) {
      const std::string id = prefix + t.id;
      switch (t.kind()) {
        case TransitionKind::Concrete: {
          std::string label = t.id;
          if (t.concrete().service) label += "\\n" + esc(*t.concrete().service);
          out_ += fmt::format("{}\"{}\" [shape=box, label=\"{}\"];\n", pad, esc(id), label);
          break;
        }
        case TransitionKind::Dummy:
          out_ += fmt::format(
              "{}\"{}\" [shape=box, style=filled, fillcolor=black, width=0.05, height=0.4, label=\"\"];\n", pad,
              esc(id));
          break;
        case TransitionKind::Refinable: {
          out_ += fmt::format("{}subgraph \"cluster_{}\" {{\n{}  label=\"{}\";\n{}  style=dashed;\n", pad, esc(id),
                              pad, esc(t.id), pad);
          for (const auto& b : t.refinable().branches) {
            const std::string bprefix = id + "/" + b.id + "/";
            out_ += fmt::format("{}  subgraph \"cluster_{}\" {{\n{}    label=\"{}{}\";\n", pad, esc(id + "/" + b.id),
                                pad, esc(b.id), b.alpha ? fmt::format(" ({})", *b.alpha) : "");
            scope(b.net, bprefix, indent + 2);
            arcs(b.net, bprefix, indent + 2);
            out_ += pad + "  }\n";
          }
          out_ += pad + "}\n";
          break;
        }
      }
    }
  }

  void arcs(const SubNet& net, const std::string& prefix, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    for (const auto& a : net.arcs) {
      const Transition* src = net.find_transition(a.source);
      const Transition* dst = net.find_transition(a.target);
      if (src != nullptr && src->is_refinable()) {
        for (const auto& b : src->refinable().branches) {
          for (const auto& exit : fragment_exits(b.net))
            out_ += fmt::format("{}\"{}\" -> \"{}\" [style=dashed];\n", pad,
                                esc(prefix + a.source + "/" + b.id + "/" + exit), esc(prefix + a.target));
        }
      } else if (dst != nullptr && dst->is_refinable()) {
        for (const auto& b : dst->refinable().branches) {
          for (const auto& entry : fragment_entries(b.net))
            out_ += fmt::format("{}\"{}\" -> \"{}\" [style=dashed];\n", pad, esc(prefix + a.source),
                                esc(prefix + a.target + "/" + b.id + "/" + entry));
        }
      } else {
        out_ += fmt::format("{}\"{}\" -> \"{}\";\n", pad, esc(prefix + a.source), esc(prefix + a.target));
      }
    }
  }

 private:
  std::string input_;
  std::string output_;
  std::string out_;
};

}  // namespace

std::string export_dot(const Htppn& model) {
  DotWriter w(model.name, model.input_place, model.output_place);
  const SubNet net = canonicalized(model.net);
  w.scope(net, "", 1);
  w.arcs(net, "", 1);
  return w.finish();
}

std::string export_dot(const FlatNet& net) {
  DotWriter w(net.name, net.input_place, net.output_place);
  const SubNet sorted = canonicalized(net.net);
  w.scope(sorted, "", 1);
  w.arcs(sorted, "", 1);
  return w.finish();
}

}  // namespace htppn
