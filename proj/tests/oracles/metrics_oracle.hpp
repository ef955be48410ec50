#pragma once

// Textbook transcription of the evaluation formulas, written per mention
// and per type without the library's tallies.

#include <set>
#include <string>
#include <vector>

namespace oracle {

using Types = std::set<std::string>;

struct Scores {
  double p = 0, r = 0, f = 0;
};

inline double f1(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

inline std::size_t overlap(const Types& a, const Types& b) {
  std::size_t n = 0;
  for (const auto& x : a) {
    for (const auto& y : b) n += (x == y);
  }
  return n;
}

inline double strict(const std::vector<Types>& g, const std::vector<Types>& p) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    bool same = g[i].size() == p[i].size() && overlap(g[i], p[i]) == g[i].size();
    ok += same;
  }
  return double(ok) / double(g.size());
}

inline Scores macro(const std::vector<Types>& g, const std::vector<Types>& p) {
  double ps = 0, rs = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double both = double(overlap(p[i], g[i]));
    ps += p[i].empty() ? 0.0 : both / double(p[i].size());
    rs += g[i].empty() ? 0.0 : both / double(g[i].size());
  }
  Scores s{ps / double(g.size()), rs / double(g.size()), 0};
  s.f = f1(s.p, s.r);
  return s;
}

inline Scores micro(const std::vector<Types>& g, const std::vector<Types>& p) {
  std::size_t both = 0, np = 0, ng = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    both += overlap(p[i], g[i]);
    np += p[i].size();
    ng += g[i].size();
  }
  Scores s{np ? double(both) / double(np) : 0.0, ng ? double(both) / double(ng) : 0.0, 0};
  s.f = f1(s.p, s.r);
  return s;
}

struct Gpc {
  std::size_t G = 0, P = 0, C = 0;
};

inline Gpc count_for(const std::string& t, const std::vector<Types>& g,
                     const std::vector<Types>& p) {
  Gpc x;
  for (std::size_t i = 0; i < g.size(); ++i) {
    bool in_g = g[i].count(t) > 0, in_p = p[i].count(t) > 0;
    x.G += in_g;
    x.P += in_p;
    x.C += in_g && in_p;
  }
  return x;
}

inline Scores per_type(const std::vector<Types>& g, const std::vector<Types>& p, bool macro_avg) {
  Types universe;
  for (const auto& s : g) universe.insert(s.begin(), s.end());
  for (const auto& s : p) universe.insert(s.begin(), s.end());
  std::size_t sg = 0, sp = 0, sc = 0;
  for (const auto& t : universe) {
    auto x = count_for(t, g, p);
    sg += x.G;
    sp += x.P;
    sc += x.C;
  }
  Scores s;
  if (!macro_avg) {
    s.p = sp ? double(sc) / double(sp) : 0.0;
    s.r = sg ? double(sc) / double(sg) : 0.0;
  } else if (sg) {
    for (const auto& t : universe) {
      auto x = count_for(t, g, p);
      const double w = double(x.G) / double(sg);
      if (x.P) s.p += double(x.C) / double(x.P) * w;
      if (x.G) s.r += double(x.C) / double(x.G) * w;
    }
  }
  s.f = f1(s.p, s.r);
  return s;
}

}  // namespace oracle
