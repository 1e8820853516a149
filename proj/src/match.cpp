#include "diel/match.hpp"

#include <cctype>

namespace diel::match {

PatternError::PatternError(std::size_t pos, const std::string& message)
    : std::runtime_error("pattern error at " + std::to_string(pos) + ": " + message),
      position(pos) {}

namespace {

auto is_special(char c) -> bool {
    return c == '(' || c == ')' || c == '|' || c == '*' || c == '+' || c == '?' || c == '\\';
}

class PatternParser {
   public:
    explicit PatternParser(std::string_view text) : text_(text) {}

    auto parse() -> PatternNode {
        skip_space();
        if (pos_ >= text_.size()) throw PatternError(0, "empty pattern");
        PatternNode root = alternation();
        skip_space();
        if (pos_ < text_.size()) {
            // only a ')' can stop alternation() early
            throw PatternError(pos_, "unmatched ')'");
        }
        return root;
    }

   private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t next_group_ = 1;

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    auto peek() -> char {
        skip_space();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    auto alternation() -> PatternNode {
        std::vector<PatternNode> branches;
        branches.push_back(concatenation());
        while (peek() == '|') {
            ++pos_;
            branches.push_back(concatenation());
        }
        if (branches.size() == 1) return std::move(branches.front());
        PatternNode node;
        node.kind = PatternNode::Kind::Alternation;
        node.children = std::move(branches);
        return node;
    }

    auto concatenation() -> PatternNode {
        std::vector<PatternNode> items;
        while (true) {
            const char c = peek();
            if (c == '\0' || c == ')' || c == '|') break;
            items.push_back(repetition());
        }
        if (items.empty()) throw PatternError(pos_, "empty alternative");
        if (items.size() == 1) return std::move(items.front());
        PatternNode node;
        node.kind = PatternNode::Kind::Concat;
        node.children = std::move(items);
        return node;
    }

    auto repetition() -> PatternNode {
        PatternNode atom_node = atom();
        while (true) {
            const char c = peek();
            PatternNode::Kind kind{};
            if (c == '*') {
                kind = PatternNode::Kind::Star;
            } else if (c == '+') {
                kind = PatternNode::Kind::Plus;
            } else if (c == '?') {
                kind = PatternNode::Kind::Optional;
            } else {
                break;
            }
            ++pos_;
            PatternNode wrapped;
            wrapped.kind = kind;
            wrapped.children.push_back(std::move(atom_node));
            atom_node = std::move(wrapped);
        }
        return atom_node;
    }

    auto atom() -> PatternNode {
        const char c = peek();
        const std::size_t start = pos_;
        if (c == '(') {
            ++pos_;
            PatternNode node;
            if (text_.substr(pos_, 2) == "?:") {
                pos_ += 2;
                node.kind = PatternNode::Kind::Group;
            } else {
                node.kind = PatternNode::Kind::Capture;
                node.group = next_group_++;
            }
            node.children.push_back(alternation());
            if (peek() != ')') throw PatternError(start, "unbalanced '('");
            ++pos_;
            return node;
        }
        if (c == '*' || c == '+' || c == '?') {
            throw PatternError(pos_, std::string("dangling operator '") + c + "'");
        }
        std::string symbol;
        while (pos_ < text_.size()) {
            const char ch = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(ch))) break;
            if (ch == '\\') {
                if (pos_ + 1 >= text_.size()) throw PatternError(pos_, "trailing escape");
                symbol += text_[pos_ + 1];
                pos_ += 2;
                continue;
            }
            if (is_special(ch)) break;
            symbol += ch;
            ++pos_;
        }
        PatternNode node;
        node.kind = PatternNode::Kind::Symbol;
        node.symbol = std::move(symbol);
        return node;
    }
};

class Builder {
   public:
    explicit Builder(CompiledNfa& nfa) : nfa_(nfa) {}

    struct Fragment {
        std::size_t start;
        std::size_t end;  // state whose `out` is still dangling
    };

    auto add(NfaState::Kind kind) -> std::size_t {
        NfaState s;
        s.kind = kind;
        nfa_.states.push_back(std::move(s));
        return nfa_.states.size() - 1;
    }

    auto build(const PatternNode& node) -> Fragment {
        using K = PatternNode::Kind;
        switch (node.kind) {
            case K::Symbol: {
                const auto s = add(NfaState::Kind::Symbol);
                nfa_.states[s].symbol = node.symbol;
                return {s, s};
            }
            case K::Concat: {
                Fragment first = build(node.children.front());
                std::size_t end = first.end;
                for (std::size_t i = 1; i < node.children.size(); ++i) {
                    Fragment f = build(node.children[i]);
                    nfa_.states[end].out = f.start;
                    end = f.end;
                }
                return {first.start, end};
            }
            case K::Alternation: {
                const auto join = add(NfaState::Kind::Epsilon);
                std::vector<Fragment> branches;
                for (const auto& child : node.children) {
                    branches.push_back(build(child));
                    nfa_.states[branches.back().end].out = join;
                }
                // right-nested splits: branch 0 preferred, then 1, ...
                std::size_t entry = branches.back().start;
                for (std::size_t i = branches.size() - 1; i-- > 0;) {
                    const auto split = add(NfaState::Kind::Split);
                    nfa_.states[split].out = branches[i].start;
                    nfa_.states[split].out2 = entry;
                    entry = split;
                }
                return {entry, join};
            }
            case K::Star: {
                const auto loop = add(NfaState::Kind::Split);
                Fragment body = build(node.children.front());
                const auto exit = add(NfaState::Kind::Epsilon);
                nfa_.states[loop].out = body.start;
                nfa_.states[loop].out2 = exit;
                nfa_.states[body.end].out = loop;
                return {loop, exit};
            }
            case K::Plus: {
                Fragment body = build(node.children.front());
                const auto loop = add(NfaState::Kind::Split);
                const auto exit = add(NfaState::Kind::Epsilon);
                nfa_.states[body.end].out = loop;
                nfa_.states[loop].out = body.start;
                nfa_.states[loop].out2 = exit;
                return {body.start, exit};
            }
            case K::Optional: {
                const auto split = add(NfaState::Kind::Split);
                Fragment body = build(node.children.front());
                const auto exit = add(NfaState::Kind::Epsilon);
                nfa_.states[split].out = body.start;
                nfa_.states[split].out2 = exit;
                nfa_.states[body.end].out = exit;
                return {split, exit};
            }
            case K::Capture: {
                const auto open = add(NfaState::Kind::Open);
                nfa_.states[open].group = node.group;
                Fragment body = build(node.children.front());
                const auto close = add(NfaState::Kind::Close);
                nfa_.states[close].group = node.group;
                nfa_.states[open].out = body.start;
                nfa_.states[body.end].out = close;
                nfa_.group_count = std::max(nfa_.group_count, node.group);
                return {open, close};
            }
            case K::Group:
                return build(node.children.front());
        }
        return {0, 0};
    }

   private:
    CompiledNfa& nfa_;
};

struct Thread {
    std::size_t state = 0;
    int depth = 0;
    std::vector<std::size_t> captured;
    std::vector<std::size_t> open_at;
    std::vector<std::optional<std::pair<std::size_t, std::size_t>>> groups;
};

class Simulator {
   public:
    explicit Simulator(const CompiledNfa& nfa) : nfa_(nfa), mark_(nfa.states.size(), 0) {}

    /// Longest match anchored at `begin`; nullopt if none (not even empty).
    auto longest_at(const std::vector<std::optional<std::string>>& symbols, std::size_t begin)
        -> std::optional<MatchSpan> {
        std::optional<MatchSpan> best;
        std::vector<Thread> current;
        Thread seed;
        seed.state = nfa_.start;
        seed.open_at.assign(nfa_.group_count + 1, 0);
        seed.groups.assign(nfa_.group_count, std::nullopt);
        ++generation_;
        add_thread(current, std::move(seed), begin);
        std::size_t pos = begin;
        while (true) {
            for (const Thread& t : current) {
                if (nfa_.states[t.state].kind == NfaState::Kind::Accept) {
                    best = MatchSpan{begin, pos, t.captured, t.groups};
                    break;
                }
            }
            if (current.empty() || pos >= symbols.size()) break;
            std::vector<Thread> next;
            ++generation_;
            const auto& sym = symbols[pos];
            for (Thread& t : current) {
                const NfaState& s = nfa_.states[t.state];
                if (s.kind != NfaState::Kind::Symbol || !sym || s.symbol != *sym) continue;
                if (t.depth > 0) t.captured.push_back(pos);
                t.state = s.out;
                add_thread(next, std::move(t), pos + 1);
            }
            current = std::move(next);
            ++pos;
        }
        return best;
    }

   private:
    const CompiledNfa& nfa_;
    std::vector<std::size_t> mark_;
    std::size_t generation_ = 0;

    // Epsilon closure in priority order; first arrival at a state wins.
    void add_thread(std::vector<Thread>& list, Thread t, std::size_t pos) {
        if (mark_[t.state] == generation_) return;
        mark_[t.state] = generation_;
        const NfaState& s = nfa_.states[t.state];
        switch (s.kind) {
            case NfaState::Kind::Epsilon:
                t.state = s.out;
                add_thread(list, std::move(t), pos);
                return;
            case NfaState::Kind::Split: {
                Thread other = t;
                t.state = s.out;
                add_thread(list, std::move(t), pos);
                other.state = s.out2;
                add_thread(list, std::move(other), pos);
                return;
            }
            case NfaState::Kind::Open:
                t.open_at[s.group] = pos;
                ++t.depth;
                t.state = s.out;
                add_thread(list, std::move(t), pos);
                return;
            case NfaState::Kind::Close:
                t.groups[s.group - 1] = std::make_pair(t.open_at[s.group], pos);
                --t.depth;
                t.state = s.out;
                add_thread(list, std::move(t), pos);
                return;
            case NfaState::Kind::Symbol:
            case NfaState::Kind::Accept:
                list.push_back(std::move(t));
                return;
        }
    }
};

}  // namespace

auto parse_pattern(std::string_view pattern) -> PatternNode { return PatternParser(pattern).parse(); }

auto compile_pattern(std::string_view pattern) -> CompiledNfa {
    const PatternNode root = parse_pattern(pattern);
    CompiledNfa nfa;
    nfa.source = std::string(pattern);
    Builder builder(nfa);
    const auto frag = builder.build(root);
    const auto accept = builder.add(NfaState::Kind::Accept);
    nfa.states[frag.end].out = accept;
    nfa.start = frag.start;
    nfa.accept = accept;
    return nfa;
}

auto accepts(const CompiledNfa& nfa, const std::vector<std::string>& symbols) -> bool {
    std::vector<std::optional<std::string>> seq(symbols.begin(), symbols.end());
    Simulator sim(nfa);
    const auto m = sim.longest_at(seq, 0);
    return m && m->end == seq.size();
}

auto find_matches(const CompiledNfa& nfa, const std::vector<std::optional<std::string>>& symbols)
    -> std::vector<MatchSpan> {
    std::vector<MatchSpan> matches;
    Simulator sim(nfa);
    std::size_t pos = 0;
    while (pos < symbols.size()) {
        auto m = sim.longest_at(symbols, pos);
        if (m && m->end > pos) {
            pos = m->end;
            matches.push_back(std::move(*m));
        } else {
            ++pos;
        }
    }
    return matches;
}

auto run_match(const Relation& rows, std::string_view column, const CompiledNfa& nfa,
               const std::vector<std::string>& projection) -> Relation {
    const std::size_t col = find_column(rows.schema, column);
    if (col == std::string::npos) {
        throw std::invalid_argument("match column " + std::string(column) + " not found");
    }
    std::vector<std::size_t> picked;
    if (projection.empty()) {
        for (std::size_t i = 0; i < rows.schema.size(); ++i) picked.push_back(i);
    } else {
        for (const auto& name : projection) {
            const std::size_t i = find_column(rows.schema, name);
            if (i == std::string::npos) {
                throw std::invalid_argument("projected column " + name + " not found");
            }
            picked.push_back(i);
        }
    }

    std::vector<std::optional<std::string>> symbols;
    symbols.reserve(rows.size());
    for (const Row& r : rows.rows) {
        if (r[col].is_null()) {
            symbols.emplace_back(std::nullopt);
        } else {
            symbols.emplace_back(r[col].to_string());
        }
    }

    Relation out;
    out.schema.push_back({"mg", ValueType::Integer});
    for (std::size_t i : picked) out.schema.push_back(rows.schema[i]);
    const auto matches = find_matches(nfa, symbols);
    for (std::size_t occurrence = 0; occurrence < matches.size(); ++occurrence) {
        for (std::size_t pos : matches[occurrence].captured) {
            Row r;
            r.reserve(picked.size() + 1);
            r.emplace_back(static_cast<std::int64_t>(occurrence));
            for (std::size_t i : picked) r.push_back(rows.rows[pos][i]);
            out.rows.push_back(std::move(r));
        }
    }
    return out;
}

}  // namespace diel::match
