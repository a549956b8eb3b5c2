#include "relbench/manifest.hpp"

#include "relbench/error.hpp"
#include "relbench/hash.hpp"

#include <fstream>
#include <sstream>

namespace relbench {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> strings(const Json& j) { return j.get<std::vector<std::string>>(); }

std::vector<std::pair<std::string, std::string>> clauses(const Json& j) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [attr, text] : j.items()) out.emplace_back(attr, text.get<std::string>());
  return out;
}

ViolationPolicy parse_policy(const std::string& s) {
  if (s == "refuse") return ViolationPolicy::refuse;
  if (s == "warn") return ViolationPolicy::warn;
  throw ConfigError("on_violation must be refuse or warn, got '" + s + "'");
}

template <typename Map>
const typename Map::mapped_type& lookup(const Map& map, const std::string& name, const std::string& what,
                                        const std::string& dataset) {
  auto it = map.find(name);
  if (it == map.end()) throw ConfigError(dataset + ": unknown " + what + " '" + name + "'");
  return it->second;
}

}  // namespace

const Relation& DatasetManifest::relation(const std::string& name) const {
  return lookup(relations, name, "relation", dataset);
}
const NamedFd& DatasetManifest::fd(const std::string& name) const { return lookup(fds, name, "fd", dataset); }
const ForeignKeyConstraint& DatasetManifest::fkc(const std::string& name) const {
  return lookup(fkcs, name, "fkc", dataset);
}

const ChainSpec& DatasetManifest::chain(const std::string& name) const {
  for (const auto& c : chains) {
    if (c.name == name) return c;
  }
  throw ConfigError(dataset + ": unknown chain '" + name + "'");
}

std::vector<ChainLink> DatasetManifest::chain_links(const ChainSpec& spec) const {
  std::vector<ChainLink> out;
  for (const auto& link : spec.links) {
    const auto& nfd = fd(link.fd);
    std::optional<ForeignKeyConstraint> k;
    if (link.fkc) k = fkc(*link.fkc);
    out.push_back({relation(nfd.relation), nfd.fd, k});
  }
  return out;
}

DatasetManifest load_manifest(const fs::path& path) {
  const std::string text = read_file(path);
  const fs::path base = path.parent_path();
  DatasetManifest m;
  m.path = path;
  std::vector<std::string> hash_parts{text};
  try {
    const Json j = Json::parse(text);
    m.dataset = j.at("dataset").get<std::string>();

    for (const auto& r : j.at("relations")) {
      std::vector<Attribute> attrs;
      for (const auto& a : r.at("attributes")) {
        attrs.push_back({a.at("name").get<std::string>(), parse_attribute_kind(a.value("kind", "text")),
                         a.value("person_name", false)});
      }
      Schema schema(r.at("name").get<std::string>(), std::move(attrs));
      fs::path csv = base / r.at("csv").get<std::string>();
      std::string body = read_file(csv);
      hash_parts.push_back(body);
      m.relations.emplace(schema.name(), parse_relation(body, schema, csv.string()));
    }

    for (const auto& [name, f] : j.at("fds").items()) {
      NamedFd nfd{name, f.at("relation").get<std::string>(), {strings(f.at("lhs")), strings(f.at("rhs"))}};
      nfd.fd.validate(m.relation(nfd.relation).schema());
      m.fds.emplace(name, std::move(nfd));
    }
    if (auto it = j.find("fkcs"); it != j.end()) {
      for (const auto& [name, k] : it->items()) {
        ForeignKeyConstraint fkc{k.at("child").get<std::string>(), strings(k.at("child_attrs")),
                                 k.at("parent").get<std::string>(), strings(k.at("parent_key"))};
        m.relation(fkc.child_relation);
        m.relation(fkc.parent_relation);
        m.fkcs.emplace(name, std::move(fkc));
      }
    }

    const Json& q = j.at("questions");
    if (auto it = q.find("binary"); it != q.end()) {
      m.binary = BinarySpec{it->at("fd").get<std::string>(), it->at("basic").get<std::string>(),
                            it->at("negated").get<std::string>()};
      m.fd(m.binary->fd);
    }
    if (auto it = q.find("multiple_choice"); it != q.end()) {
      McSpec mc;
      mc.fds = strings(it->at("fds"));
      for (const auto& f : mc.fds) m.fd(f);
      mc.tmpl.qtype = QuestionType::multiple_choice;
      mc.tmpl.stems = strings(it->at("stems"));
      for (const auto& o : it->at("options")) {
        mc.tmpl.options.push_back({o.at("attribute").get<std::string>(), strings(o.at("phrasings"))});
      }
      m.multiple_choice = std::move(mc);
    }
    if (auto it = q.find("multihop"); it != q.end()) {
      for (const auto& c : *it) {
        ChainSpec spec{c.at("name").get<std::string>(), {}, c.at("basic").get<std::string>(),
                       c.at("negated").get<std::string>()};
        for (const auto& l : c.at("links")) {
          ChainLinkSpec link{l.at("fd").get<std::string>(), std::nullopt};
          if (l.contains("fkc")) link.fkc = l.at("fkc").get<std::string>();
          spec.links.push_back(std::move(link));
        }
        if (spec.links.empty()) throw ConfigError(m.dataset + ": chain " + spec.name + " has no links");
        m.chain_links(spec);
        m.chains.push_back(std::move(spec));
      }
    }

    if (auto it = j.find("probe"); it != j.end()) {
      ProbeSpec p{it->at("relation").get<std::string>(), it->at("fd").get<std::string>(),
                  {it->at("entity").get<std::string>(), clauses(it->at("chained")), clauses(it->at("standalone"))}};
      if (m.fd(p.fd).relation != p.relation) {
        throw ConfigError(m.dataset + ": probe fd " + p.fd + " is not over relation " + p.relation);
      }
      m.probe = std::move(p);
    }
    if (auto it = j.find("demonstrations"); it != j.end()) {
      for (const auto& [style, file] : it->items()) {
        m.demonstrations[parse_demo_style(style)] = base / file.get<std::string>();
      }
    }
    if (auto it = j.find("provider"); it != j.end()) {
      m.endpoint = it->value("endpoint", "");
      m.api_key_env = it->value("api_key_env", "");
    }
    m.on_violation = parse_policy(j.value("on_violation", "refuse"));
  } catch (const Json::exception& e) {
    throw ParseError("malformed manifest " + path.string() + ": " + e.what());
  }

  std::string joined;
  for (const auto& part : hash_parts) joined += sha256_hex(part);
  m.content_hash = sha256_hex(joined);
  return m;
}

std::vector<DatasetManifest> load_manifests(const fs::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError("malformed manifest " + path.string() + ": " + e.what());
  }
  if (!j.contains("datasets")) return {load_manifest(path)};
  std::vector<DatasetManifest> out;
  for (const auto& p : j.at("datasets")) out.push_back(load_manifest(path.parent_path() / p.get<std::string>()));
  for (std::size_t i = 1; i < out.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (out[i].dataset == out[k].dataset) throw ConfigError("dataset '" + out[i].dataset + "' listed twice");
    }
  }
  return out;
}

std::vector<ConstraintCheck> check_constraints(const DatasetManifest& m) {
  std::vector<ConstraintCheck> out;
  for (const auto& [name, nfd] : m.fds) {
    out.push_back({"fd", name, nfd.relation + ": " + to_string(nfd.fd), check_fd(m.relation(nfd.relation), nfd.fd)});
  }
  for (const auto& [name, k] : m.fkcs) {
    std::string desc;
    for (std::size_t i = 0; i < k.child_attrs.size(); ++i) desc += (i ? "," : "") + k.child_attrs[i];
    desc = k.child_relation + "(" + desc + ") references " + k.parent_relation;
    out.push_back({"fkc", name, desc, check_fkc(m.relation(k.child_relation), m.relation(k.parent_relation), k)});
  }
  return out;
}

}  // namespace relbench
