#include "passlab/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace passlab {

void ColorRange::validate() const {
  if (!std::isfinite(min) || !std::isfinite(max) || !(min < max)) {
    throw std::invalid_argument(fmt::format("color range needs min < max, got [{}, {}]", min, max));
  }
}

TeamId infer_attacking_team(const TrackedFrame& frame) {
  if (frame.meta.attacking_team) return *frame.meta.attacking_team;
  if (frame.players.empty()) throw std::invalid_argument("frame has no players");
  const PlayerState* best = &frame.players.front();
  double best_d = distance(best->pos, frame.ball.pos);
  for (const auto& p : frame.players) {
    const double d = distance(p.pos, frame.ball.pos);
    if (d < best_d || (d == best_d && p.id < best->id)) {
      best = &p;
      best_d = d;
    }
  }
  return best->team;
}

FrameScene prepare_scene(const TrackedFrame& raw, const TeamId& attacking_team, const FeatureParams& params) {
  FrameScene s;
  s.frame = orient_for(raw, attacking_team, params.pitch);
  const PlayerSet offside = offside_positions(s.frame);
  s.field = compute_dominance_grid(s.frame, params.pitch, params.motion, offside);
  s.scores = space_scores(s.field, s.frame, params.weight);
  return s;
}

ColorRange default_color_range(std::span<const SpaceScoreTable> tables) {
  std::vector<double> v;
  for (const auto& t : tables) {
    for (const auto& e : t.entries) {
      if (!e.excluded_offside) v.push_back(e.score);
    }
  }
  if (v.empty()) return {0.0, 1.0};
  std::sort(v.begin(), v.end());
  auto pct = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  ColorRange r{pct(0.05), pct(0.95)};
  if (!(r.min < r.max)) r = {r.min - 1.0, r.max + 1.0};
  return r;
}

namespace {

struct Rgb {
  double r, g, b;
};

// Light to dark ramps.
constexpr Rgb kRedLo{252, 187, 161}, kRedHi{165, 15, 21};
constexpr Rgb kBlueLo{198, 219, 239}, kBlueHi{8, 48, 107};

std::string ramp(Side side, double t) {
  const Rgb lo = side == Side::attacking ? kRedLo : kBlueLo;
  const Rgb hi = side == Side::attacking ? kRedHi : kBlueHi;
  auto ch = [&](double a, double b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
  return fmt::format("#{:02x}{:02x}{:02x}", ch(lo.r, hi.r), ch(lo.g, hi.g), ch(lo.b, hi.b));
}

std::string stroke_of(Side side) { return side == Side::attacking ? "#cb181d" : "#2171b5"; }

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  Canvas(const PitchSpec& pitch, double ppm) : pitch_(pitch), ppm_(ppm) {}
  double x(double m) const { return kPad + (m + pitch_.half_length()) * ppm_; }
  double y(double m) const { return kPad + (pitch_.half_width() - m) * ppm_; }
  double len(double m) const { return m * ppm_; }
  double width() const { return 2 * kPad + pitch_.length * ppm_; }
  double height() const { return 2 * kPad + pitch_.width * ppm_; }

 private:
  static constexpr double kPad = 10.0;
  PitchSpec pitch_;
  double ppm_;
};

// Fixed precision keeps the output byte-stable and compact.
std::string num(double v) {
  std::string s = fmt::format("{:.2f}", v);
  if (s == "-0.00") s = "0.00";
  return s;
}

void draw_pitch(std::string& out, const Canvas& c, const PitchSpec& pitch) {
  const double hl = pitch.half_length(), hw = pitch.half_width();
  out += fmt::format("<rect class=\"pitch\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#f4f9f0\"/>\n",
                     num(c.x(-hl)), num(c.y(hw)), num(c.len(pitch.length)), num(c.len(pitch.width)));
}

void draw_markings(std::string& out, const Canvas& c, const PitchSpec& pitch) {
  const double hl = pitch.half_length(), hw = pitch.half_width();
  out += "<g class=\"markings\" fill=\"none\" stroke=\"#555555\" stroke-width=\"1\">\n";
  out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>\n", num(c.x(-hl)), num(c.y(hw)),
                     num(c.len(pitch.length)), num(c.len(pitch.width)));
  out += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\"/>\n", num(c.x(0)), num(c.y(hw)), num(c.y(-hw)));
  out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>\n", num(c.x(0)), num(c.y(0)), num(c.len(9.15)));
  out += "</g>\n";
}

void draw_regions(std::string& out, const Canvas& c, const DominanceField& field, const TrackedFrame& frame,
                  const SpaceScoreTable& scores, const ColorRange& range) {
  // Per owner index: fill colour of its region.
  std::vector<std::string> fill(field.players.size());
  for (std::size_t i = 0; i < field.players.size(); ++i) {
    const PlayerState* p = frame.find(field.players[i]);
    const SpaceScore* s = scores.find(field.players[i]);
    const double score = s ? s->score : 0.0;
    const double t = std::clamp((score - range.min) / (range.max - range.min), 0.0, 1.0);
    fill[i] = ramp(p ? p->side : Side::defending, t);
  }
  const double cell = field.pitch.grid_cell;
  const double x0 = -field.pitch.half_length(), y0 = -field.pitch.half_width();
  out += "<g class=\"regions\" fill-opacity=\"0.45\">\n";
  for (std::size_t r = 0; r < field.rows; ++r) {
    const double ylo = y0 + static_cast<double>(r) * cell;
    const double yhi = std::min(ylo + cell, field.pitch.half_width());
    std::size_t start = 0;
    for (std::size_t col = 1; col <= field.cols; ++col) {
      const std::size_t base = r * field.cols;
      if (col < field.cols && field.owner[base + col] == field.owner[base + start]) continue;
      const double xlo = x0 + static_cast<double>(start) * cell;
      const double xhi = std::min(x0 + static_cast<double>(col) * cell, field.pitch.half_length());
      out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>\n", num(c.x(xlo)),
                         num(c.y(yhi)), num(c.len(xhi - xlo)), num(c.len(yhi - ylo)),
                         fill[field.owner[base + start]]);
      start = col;
    }
  }
  out += "</g>\n";
}

void draw_boundaries(std::string& out, const Canvas& c, const DominanceField& field) {
  const double cell = field.pitch.grid_cell;
  const double x0 = -field.pitch.half_length(), y0 = -field.pitch.half_width();
  const double xmax = field.pitch.half_length(), ymax = field.pitch.half_width();
  std::string d;
  // Vertical edges between horizontally adjacent cells, merged along y.
  for (std::size_t col = 1; col < field.cols; ++col) {
    const double x = x0 + static_cast<double>(col) * cell;
    std::size_t r = 0;
    while (r < field.rows) {
      auto differs = [&](std::size_t row) {
        return field.owner[row * field.cols + col] != field.owner[row * field.cols + col - 1];
      };
      if (!differs(r)) {
        ++r;
        continue;
      }
      const std::size_t begin = r;
      while (r < field.rows && differs(r)) ++r;
      const double ya = y0 + static_cast<double>(begin) * cell;
      const double yb = std::min(y0 + static_cast<double>(r) * cell, ymax);
      d += fmt::format("M{} {}V{}", num(c.x(x)), num(c.y(ya)), num(c.y(yb)));
    }
  }
  // Horizontal edges between vertically adjacent cells, merged along x.
  for (std::size_t r = 1; r < field.rows; ++r) {
    const double y = y0 + static_cast<double>(r) * cell;
    std::size_t col = 0;
    while (col < field.cols) {
      auto differs = [&](std::size_t cc) {
        return field.owner[r * field.cols + cc] != field.owner[(r - 1) * field.cols + cc];
      };
      if (!differs(col)) {
        ++col;
        continue;
      }
      const std::size_t begin = col;
      while (col < field.cols && differs(col)) ++col;
      const double xa = x0 + static_cast<double>(begin) * cell;
      const double xb = std::min(x0 + static_cast<double>(col) * cell, xmax);
      d += fmt::format("M{} {}H{}", num(c.x(xa)), num(c.y(y)), num(c.x(xb)));
    }
  }
  out += fmt::format("<path class=\"boundaries\" fill=\"none\" stroke=\"#333333\" stroke-width=\"0.6\" d=\"{}\"/>\n", d);
}

void draw_glyphs(std::string& out, const Canvas& c, const TrackedFrame& frame, const SpaceScoreTable& scores,
                 const ColorRange& range, const RenderOptions& opts) {
  std::vector<const PlayerState*> order;
  for (const auto& p : frame.players) order.push_back(&p);
  // Attackers first, then by id, independent of input order.
  std::sort(order.begin(), order.end(), [](const PlayerState* a, const PlayerState* b) {
    if (a->side != b->side) return a->side == Side::attacking;
    return a->id < b->id;
  });
  const double r = 6.0;
  for (const PlayerState* p : order) {
    const SpaceScore* s = scores.find(p->id);
    const bool hollow = s == nullptr || s->excluded_offside;
    const char* side = p->side == Side::attacking ? "attacking" : "defending";
    out += fmt::format("<g class=\"glyph player {}{}\" data-id=\"{}\">\n", side, hollow ? " offside" : "",
                       escape_xml(p->id));
    const double cx = c.x(p->pos.x), cy = c.y(p->pos.y);
    if (hollow) {
      out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                         num(cx), num(cy), num(r), stroke_of(p->side));
    } else {
      const double t = std::clamp((s->score - range.min) / (range.max - range.min), 0.0, 1.0);
      out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
                         num(cx), num(cy), num(r), ramp(p->side, t), stroke_of(p->side));
      if (opts.show_scores) {
        out += fmt::format("<text class=\"score\" x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"middle\">{:.0f}</text>\n",
                           num(cx), num(cy + r + 9.0), s->score);
      }
    }
    out += "</g>\n";
  }
  out += fmt::format(
      "<g class=\"glyph ball\"><circle cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"#ffffff\" stroke=\"#000000\" "
      "stroke-width=\"1.5\"/></g>\n",
      num(c.x(frame.ball.pos.x)), num(c.y(frame.ball.pos.y)));
}

void draw_frame_body(std::string& out, const Canvas& c, const TrackedFrame& frame, const SpaceScoreTable& scores,
                     const DominanceField& field, const ColorRange& range, const RenderOptions& opts) {
  draw_pitch(out, c, field.pitch);
  draw_regions(out, c, field, frame, scores, range);
  if (opts.show_voronoi_boundaries) draw_boundaries(out, c, field);
  draw_markings(out, c, field.pitch);
  draw_glyphs(out, c, frame, scores, range, opts);
}

std::string header(const Canvas& c) {
  return fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
      num(c.width()), num(c.height()));
}

ColorRange resolve_range(const RenderOptions& opts, std::span<const SpaceScoreTable> tables) {
  ColorRange r = opts.colors ? *opts.colors : default_color_range(tables);
  r.validate();
  return r;
}

}  // namespace

std::string render_frame_svg(const TrackedFrame& frame, const SpaceScoreTable& scores, const DominanceField& field,
                             const RenderOptions& opts) {
  const Canvas c(field.pitch, opts.pixels_per_metre);
  const ColorRange range = resolve_range(opts, std::span<const SpaceScoreTable>(&scores, 1));
  std::string out = header(c);
  out += fmt::format("<title>frame {} t={:.2f}s</title>\n", frame.frame_index, frame.time);
  draw_frame_body(out, c, frame, scores, field, range, opts);
  out += "</svg>\n";
  return out;
}

std::string render_animation_svg(std::span<const FrameScene> scenes, const RenderOptions& opts) {
  if (scenes.empty()) throw std::invalid_argument("render_animation_svg: no frames");
  if (!(opts.seconds_per_frame > 0.0)) throw std::invalid_argument("render_animation_svg: seconds_per_frame <= 0");
  std::vector<SpaceScoreTable> tables;
  for (const auto& s : scenes) tables.push_back(s.scores);
  const ColorRange range = resolve_range(opts, tables);
  const Canvas c(scenes.front().field.pitch, opts.pixels_per_metre);
  const double dt = opts.seconds_per_frame;
  const double total = dt * static_cast<double>(scenes.size());
  std::string out = header(c);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& s = scenes[i];
    // Each frame becomes visible during its slot of the repeating cycle.
    const double on = static_cast<double>(i) / static_cast<double>(scenes.size());
    const double off = static_cast<double>(i + 1) / static_cast<double>(scenes.size());
    out += fmt::format("<g class=\"frame\" data-frame=\"{}\" visibility=\"hidden\">\n", s.frame.frame_index);
    out += fmt::format(
        "<animate attributeName=\"visibility\" values=\"hidden;visible;hidden\" keyTimes=\"0;{};{}\" "
        "calcMode=\"discrete\" dur=\"{}s\" repeatCount=\"indefinite\"/>\n",
        fmt::format("{:.6f}", on), fmt::format("{:.6f}", off), num(total));
    draw_frame_body(out, c, s.frame, s.scores, s.field, range, opts);
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace passlab
