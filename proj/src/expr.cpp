#include "lmc/expr.hpp"

#include "lmc/errors.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace lmc {

namespace {

enum class NodeKind { Constant, Time, Coord, Neg, Add, Sub, Mul, Div, Pow, Func };

enum class Fn { Exp, Log, Sqrt, Abs, Sin, Cos, Tanh, Min, Max };

struct FnInfo {
    std::string_view name;
    Fn fn;
    int arity;
};

constexpr std::array<FnInfo, 9> kFunctions{{
    {"exp", Fn::Exp, 1},
    {"log", Fn::Log, 1},
    {"sqrt", Fn::Sqrt, 1},
    {"abs", Fn::Abs, 1},
    {"sin", Fn::Sin, 1},
    {"cos", Fn::Cos, 1},
    {"tanh", Fn::Tanh, 1},
    {"min", Fn::Min, 2},
    {"max", Fn::Max, 2},
}};

const FnInfo* find_function(std::string_view name) {
    for (const auto& f : kFunctions) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

// Coordinate slot for a variable name, -1 for time, nullopt when unknown.
std::optional<int> variable_slot(std::string_view name) {
    if (name == "t") return -1;
    if (name == "x") return 0;
    if (name.size() >= 2 && name[0] == 'x') {
        int k = 0;
        auto [p, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), k);
        if (ec == std::errc{} && p == name.data() + name.size() && k >= 1 && name[1] != '0') {
            return k - 1;
        }
    }
    return std::nullopt;
}

std::string format_number(double v) {
    std::array<char, 64> buf{};
    auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    return std::string(buf.data(), p);
}

}  // namespace

struct Expr::Node {
    NodeKind kind = NodeKind::Constant;
    double value = 0.0;
    int slot = 0;
    Fn fn = Fn::Exp;
    std::string name;  // variable or function name as written
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

enum class Op : unsigned char { Push, Time, Coord, Neg, Add, Sub, Mul, Div, Pow, PowInt, Call1, Call2 };

struct Instr {
    Op op;
    Fn fn = Fn::Exp;
    int index = 0;
    double value = 0.0;
};

double apply(Fn fn, double a) {
    switch (fn) {
        case Fn::Exp: return std::exp(a);
        case Fn::Log: return std::log(a);
        case Fn::Sqrt: return std::sqrt(a);
        case Fn::Abs: return std::fabs(a);
        case Fn::Sin: return std::sin(a);
        case Fn::Cos: return std::cos(a);
        case Fn::Tanh: return std::tanh(a);
        default: return std::numeric_limits<double>::quiet_NaN();
    }
}

double apply(Fn fn, double a, double b) {
    // NaN-propagating so that undefined arguments never get silently masked.
    if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<double>::quiet_NaN();
    return fn == Fn::Min ? std::min(a, b) : std::max(a, b);
}

double int_power(double base, int n) {
    bool invert = n < 0;
    unsigned m = static_cast<unsigned>(invert ? -n : n);
    double result = 1.0;
    double b = base;
    while (m != 0) {
        if (m & 1U) result *= b;
        b *= b;
        m >>= 1U;
    }
    return invert ? 1.0 / result : result;
}

}  // namespace

struct Expr::Program {
    std::vector<Instr> code;
    std::size_t max_depth = 0;
    bool uses_time = false;
    int max_coord = 0;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

void emit(const Expr::Node& n, Expr::Program& prog) {
    switch (n.kind) {
        case NodeKind::Constant: prog.code.push_back({Op::Push, Fn::Exp, 0, n.value}); return;
        case NodeKind::Time:
            prog.uses_time = true;
            prog.code.push_back({Op::Time});
            return;
        case NodeKind::Coord:
            prog.max_coord = std::max(prog.max_coord, n.slot + 1);
            prog.code.push_back({Op::Coord, Fn::Exp, n.slot});
            return;
        case NodeKind::Neg:
            emit(*n.args[0], prog);
            prog.code.push_back({Op::Neg});
            return;
        case NodeKind::Pow: {
            const auto& rhs = *n.args[1];
            emit(*n.args[0], prog);
            if (rhs.kind == NodeKind::Constant && std::nearbyint(rhs.value) == rhs.value &&
                std::fabs(rhs.value) <= 64.0) {
                prog.code.push_back({Op::PowInt, Fn::Exp, static_cast<int>(rhs.value)});
                return;
            }
            emit(rhs, prog);
            prog.code.push_back({Op::Pow});
            return;
        }
        case NodeKind::Func:
            for (const auto& a : n.args) emit(*a, prog);
            prog.code.push_back({n.args.size() == 1 ? Op::Call1 : Op::Call2, n.fn});
            return;
        default: break;
    }
    emit(*n.args[0], prog);
    emit(*n.args[1], prog);
    Op op = Op::Add;
    switch (n.kind) {
        case NodeKind::Add: op = Op::Add; break;
        case NodeKind::Sub: op = Op::Sub; break;
        case NodeKind::Mul: op = Op::Mul; break;
        case NodeKind::Div: op = Op::Div; break;
        default: break;
    }
    prog.code.push_back({op});
}

std::shared_ptr<const Expr::Program> compile(const Expr::Node& root) {
    auto prog = std::make_shared<Expr::Program>();
    emit(root, *prog);
    std::size_t depth = 0;
    for (const auto& ins : prog->code) {
        switch (ins.op) {
            case Op::Push:
            case Op::Time:
            case Op::Coord: ++depth; break;
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div:
            case Op::Pow:
            case Op::Call2: --depth; break;
            default: break;
        }
        prog->max_depth = std::max(prog->max_depth, depth);
    }
    return prog;
}

double run(const Expr::Program& prog, double t, std::span<const double> coords) {
    constexpr std::size_t kInline = 64;
    std::array<double, kInline> inline_stack;
    inline_stack[0] = 0.0;
    std::vector<double> heap_stack;
    double* stack = inline_stack.data();
    if (prog.max_depth > kInline) {
        heap_stack.resize(prog.max_depth);
        stack = heap_stack.data();
    }
    std::size_t sp = 0;
    for (const auto& ins : prog.code) {
        switch (ins.op) {
            case Op::Push: stack[sp++] = ins.value; break;
            case Op::Time: stack[sp++] = t; break;
            case Op::Coord:
                stack[sp++] = static_cast<std::size_t>(ins.index) < coords.size()
                                  ? coords[static_cast<std::size_t>(ins.index)]
                                  : std::numeric_limits<double>::quiet_NaN();
                break;
            case Op::Neg: stack[sp - 1] = -stack[sp - 1]; break;
            case Op::Add: --sp; stack[sp - 1] += stack[sp]; break;
            case Op::Sub: --sp; stack[sp - 1] -= stack[sp]; break;
            case Op::Mul: --sp; stack[sp - 1] *= stack[sp]; break;
            case Op::Div: --sp; stack[sp - 1] /= stack[sp]; break;
            case Op::Pow: --sp; stack[sp - 1] = std::pow(stack[sp - 1], stack[sp]); break;
            case Op::PowInt: stack[sp - 1] = int_power(stack[sp - 1], ins.index); break;
            case Op::Call1: stack[sp - 1] = apply(ins.fn, stack[sp - 1]); break;
            case Op::Call2: --sp; stack[sp - 1] = apply(ins.fn, stack[sp - 1], stack[sp]); break;
        }
    }
    return stack[0];
}

NodePtr make_binary(NodeKind kind, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = kind;
    n->args = {std::move(a), std::move(b)};
    return n;
}

// ---------------------------------------------------------------------------
// Pratt parser
// ---------------------------------------------------------------------------

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, Comma, End };

struct Token {
    Tok kind;
    std::size_t pos;
    std::string_view text;
    double number = 0.0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        std::size_t i = 0;
        while (i < src_.size()) {
            char ch = src_[i];
            if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') {
                ++i;
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
                out.push_back(lex_number(i));
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
                std::size_t start = i;
                while (i < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[i])) || src_[i] == '_')) {
                    ++i;
                }
                out.push_back({Tok::Ident, start, src_.substr(start, i - start)});
                continue;
            }
            Tok kind;
            switch (ch) {
                case '+': kind = Tok::Plus; break;
                case '-': kind = Tok::Minus; break;
                case '*': kind = Tok::Star; break;
                case '/': kind = Tok::Slash; break;
                case '^': kind = Tok::Caret; break;
                case '(': kind = Tok::LParen; break;
                case ')': kind = Tok::RParen; break;
                case ',': kind = Tok::Comma; break;
                default:
                    throw SyntaxError(i, {"number", "identifier", "operator", "(", ")", ","},
                                      std::string("unexpected character '") + ch + "'");
            }
            out.push_back({kind, i, src_.substr(i, 1)});
            ++i;
        }
        out.push_back({Tok::End, src_.size(), {}});
        return out;
    }

private:
    Token lex_number(std::size_t& i) {
        std::size_t start = i;
        while (i < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[i])) || src_[i] == '.')) ++i;
        if (i < src_.size() && (src_[i] == 'e' || src_[i] == 'E')) {
            std::size_t j = i + 1;
            if (j < src_.size() && (src_[j] == '+' || src_[j] == '-')) ++j;
            if (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) {
                i = j;
                while (i < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i]))) ++i;
            }
        }
        std::string_view text = src_.substr(start, i - start);
        double v = 0.0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc{} || p != text.data() + text.size()) {
            throw SyntaxError(start, {"number"}, "malformed number '" + std::string(text) + "'");
        }
        return {Tok::Number, start, text, v};
    }

    std::string_view src_;
};

constexpr int kBpAdd = 10;
constexpr int kBpMul = 20;
constexpr int kBpUnary = 30;
constexpr int kBpPow = 40;

const std::vector<std::string> kOperandStart{"number", "identifier", "(", "-", "+"};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    NodePtr parse_all() {
        NodePtr e = parse_expr(0);
        if (peek().kind != Tok::End) {
            throw SyntaxError(peek().pos, {"operator", "end of input"},
                              "unexpected '" + std::string(peek().text) + "'");
        }
        return e;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& advance() { return toks_[pos_++]; }

    void expect(Tok kind, const std::string& what) {
        if (peek().kind != kind) {
            throw SyntaxError(peek().pos, {what},
                              peek().kind == Tok::End ? "unexpected end of input"
                                                      : "unexpected '" + std::string(peek().text) + "'");
        }
        advance();
    }

    static int left_bp(Tok k) {
        switch (k) {
            case Tok::Plus:
            case Tok::Minus: return kBpAdd;
            case Tok::Star:
            case Tok::Slash: return kBpMul;
            case Tok::Caret: return kBpPow;
            default: return 0;
        }
    }

    NodePtr parse_expr(int min_bp) {
        NodePtr lhs = nud();
        for (;;) {
            Tok k = peek().kind;
            int bp = left_bp(k);
            if (bp == 0 || bp <= min_bp) break;
            advance();
            // ^ binds right: recurse with a slightly lower floor.
            NodePtr rhs = parse_expr(k == Tok::Caret ? bp - 1 : bp);
            NodeKind kind = NodeKind::Add;
            switch (k) {
                case Tok::Plus: kind = NodeKind::Add; break;
                case Tok::Minus: kind = NodeKind::Sub; break;
                case Tok::Star: kind = NodeKind::Mul; break;
                case Tok::Slash: kind = NodeKind::Div; break;
                case Tok::Caret: kind = NodeKind::Pow; break;
                default: break;
            }
            lhs = make_binary(kind, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    NodePtr nud() {
        const Token& tok = peek();
        switch (tok.kind) {
            case Tok::Number: {
                advance();
                auto n = std::make_shared<Expr::Node>();
                n->kind = NodeKind::Constant;
                n->value = tok.number;
                return n;
            }
            case Tok::Minus: {
                advance();
                auto n = std::make_shared<Expr::Node>();
                n->kind = NodeKind::Neg;
                n->args = {parse_expr(kBpUnary)};
                return n;
            }
            case Tok::Plus:
                advance();
                return parse_expr(kBpUnary);
            case Tok::LParen: {
                advance();
                NodePtr inner = parse_expr(0);
                expect(Tok::RParen, ")");
                return inner;
            }
            case Tok::Ident: return identifier();
            case Tok::End:
                throw SyntaxError(tok.pos, kOperandStart, "unexpected end of input");
            default:
                throw SyntaxError(tok.pos, kOperandStart, "unexpected '" + std::string(tok.text) + "'");
        }
    }

    NodePtr identifier() {
        const Token tok = advance();
        if (const FnInfo* f = find_function(tok.text)) {
            expect(Tok::LParen, "(");
            auto n = std::make_shared<Expr::Node>();
            n->kind = NodeKind::Func;
            n->fn = f->fn;
            n->name = std::string(f->name);
            for (int i = 0; i < f->arity; ++i) {
                if (i > 0) expect(Tok::Comma, ",");
                n->args.push_back(parse_expr(0));
            }
            expect(Tok::RParen, ")");
            return n;
        }
        auto slot = variable_slot(tok.text);
        if (!slot) {
            throw UnknownIdentifier("unknown identifier '" + std::string(tok.text) + "' at position " +
                                    std::to_string(tok.pos));
        }
        auto n = std::make_shared<Expr::Node>();
        n->kind = *slot < 0 ? NodeKind::Time : NodeKind::Coord;
        n->slot = *slot;
        n->name = std::string(tok.text);
        return n;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

void render_into(const Expr::Node& n, std::string& out) {
    switch (n.kind) {
        case NodeKind::Constant:
            if (std::signbit(n.value)) {
                out += "(-" + format_number(-n.value) + ")";
            } else {
                out += format_number(n.value);
            }
            return;
        case NodeKind::Time:
        case NodeKind::Coord: out += n.name; return;
        case NodeKind::Neg:
            out += "(-";
            render_into(*n.args[0], out);
            out += ")";
            return;
        case NodeKind::Func:
            out += n.name + "(";
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i > 0) out += ", ";
                render_into(*n.args[i], out);
            }
            out += ")";
            return;
        default: break;
    }
    const char* op = "+";
    switch (n.kind) {
        case NodeKind::Sub: op = " - "; break;
        case NodeKind::Mul: op = " * "; break;
        case NodeKind::Div: op = " / "; break;
        case NodeKind::Pow: op = " ^ "; break;
        default: op = " + "; break;
    }
    out += "(";
    render_into(*n.args[0], out);
    out += op;
    render_into(*n.args[1], out);
    out += ")";
}

}  // namespace

Expr::Expr() : Expr(std::make_shared<Node>()) {}

Expr::Expr(std::shared_ptr<const Node> root) : root_(std::move(root)), program_(compile(*root_)) {}

Expr Expr::parse(std::string_view text) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw SyntaxError(text.size(), kOperandStart, "empty expression");
    }
    Parser parser(Lexer(text).run());
    return Expr(parser.parse_all());
}

Expr Expr::constant(double value) {
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Constant;
    n->value = value;
    return Expr(n);
}

Expr Expr::variable(std::string_view name) {
    auto slot = variable_slot(name);
    if (!slot) throw UnknownIdentifier("unknown variable '" + std::string(name) + "'");
    auto n = std::make_shared<Node>();
    n->kind = *slot < 0 ? NodeKind::Time : NodeKind::Coord;
    n->slot = *slot;
    n->name = std::string(name);
    return Expr(n);
}

Expr Expr::call(std::string_view name, std::vector<Expr> args) {
    const FnInfo* f = find_function(name);
    if (f == nullptr) throw UnknownIdentifier("unknown function '" + std::string(name) + "'");
    if (static_cast<int>(args.size()) != f->arity) {
        throw DimensionMismatch(std::string(name) + " takes " + std::to_string(f->arity) + " argument(s)");
    }
    auto n = std::make_shared<Node>();
    n->kind = NodeKind::Func;
    n->fn = f->fn;
    n->name = std::string(f->name);
    for (auto& a : args) n->args.push_back(a.root_);
    return Expr(n);
}

double Expr::operator()(double t, double x) const {
    return run(*program_, t, std::span<const double>(&x, 1));
}

double Expr::operator()(double t, std::span<const double> coords) const {
    return run(*program_, t, coords);
}

double Expr::eval_checked(double t, double x) const {
    return eval_checked(t, std::span<const double>(&x, 1));
}

double Expr::eval_checked(double t, std::span<const double> coords) const {
    double v = run(*program_, t, coords);
    if (!std::isfinite(v)) {
        std::string at = "t=" + format_number(t);
        for (std::size_t i = 0; i < coords.size(); ++i) {
            at += ", x" + std::to_string(i + 1) + "=" + format_number(coords[i]);
        }
        throw EvalDomain("'" + render() + "' is not finite at " + at);
    }
    return v;
}

std::string Expr::render() const {
    std::string out;
    render_into(*root_, out);
    return out;
}

bool Expr::depends_on_time() const { return program_->uses_time; }

int Expr::max_coordinate() const { return program_->max_coord; }

std::optional<double> Expr::constant_value() const {
    if (root_->kind == NodeKind::Constant) return root_->value;
    return std::nullopt;
}

bool Expr::is_zero() const {
    auto c = constant_value();
    return c && *c == 0.0;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(make_binary(NodeKind::Add, a.root_, b.root_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make_binary(NodeKind::Sub, a.root_, b.root_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make_binary(NodeKind::Mul, a.root_, b.root_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(make_binary(NodeKind::Div, a.root_, b.root_)); }
Expr pow(const Expr& a, const Expr& b) { return Expr(make_binary(NodeKind::Pow, a.root_, b.root_)); }

Expr operator-(const Expr& a) {
    auto n = std::make_shared<Expr::Node>();
    n->kind = NodeKind::Neg;
    n->args = {a.root_};
    return Expr(n);
}

}  // namespace lmc
