#pragma once

#include <filesystem>
#include <string>

#include "hgconv/hetgraph.hpp"

namespace hgconv {

/// Graph directory layout:
///   meta.json                     node types, relations, label type, class count
///   <type>.attrs.tsv              one row per node, attr_dim tab-separated floats
///   <src>__<edge>__<dst>.edges.tsv  src_id<TAB>dst_id per line
///   labels.tsv                    node_id<TAB>class_id
///   splits.json                   {"train": [...], "val": [...], "test": [...]}
struct GraphMeta {
  std::string label_type;
  std::size_t num_classes = 0;
};

struct Dataset {
  HeteroGraph graph;  // inverse-closed
  GraphMeta meta;
  LabelSet labels;
  SplitSpec split;
};

/// Loads and validates a graph directory; the result carries inverse relations.
/// Parse errors name the file and line.
HeteroGraph load_graph(const std::filesystem::path& dir);
GraphMeta load_meta(const std::filesystem::path& dir);
LabelSet load_labels(const std::filesystem::path& dir, const HeteroGraph& g);
SplitSpec load_splits(const std::filesystem::path& dir);
/// Graph, labels and splits; labels/splits are required.
Dataset load_dataset(const std::filesystem::path& dir);

/// Writes the directory format. Only non-inverse relations get edge files.
void save_dataset(const std::filesystem::path& dir, const HeteroGraph& g, const GraphMeta& meta,
                  const LabelSet& labels, const SplitSpec& split);

}  // namespace hgconv
