"""Information display functions for CLI."""

from ..config import CAMPAIGNS
from ..version import get_cached_version

_CAMPAIGN_HELP = {
    "energy": "L2 drift and weighted gradient form of one solve at campaign.epsilon",
    "moderateness": "W1inf growth exponent of g_eps along the ladder (data and solution H2 optional)",
    "uniqueness": "decay of ||u_eps - u~_eps|| for the two mollifier variants",
    "consistency": "convergence to a fine-grid classical reference (regular g only)",
    "duhamel": "Duhamel composition against the direct difference, under dt-refinement",
    "h2bound": "sup_t ||u||_H2 / ((1 + ||g||_W1inf) ||u0||_H2) against the pinned constant",
}

_GRAMMAR = """\
Coefficient spec ([coefficient] spec), ';'-separated:
  background=<positive>                      required
  delta(center=<x|[x, y]>, weight=<w>)
  jump(center=<x>, height=<H>)               step across x_1 = center
  bump(center=<x|[x, y]>, width=<r>, height=<H>)
  sampled(path="<field.csv>")

Initial data ([data] spec), one item:
  gaussian(center=<x|[x, y]>, a=<a>, k0=<k>)
  delta(center=<x|[x, y]>, weight=<w>)
  sampled(path="<field.csv>")

Sections: [grid] d, half_width, n   [ladder] eps0, ratio, count
          [mollifier] variant, second_variant (bump | polynomial)
          [stepper] dt ("auto" or number), T, tolerance, snapshot_stride, staggering
          [campaign] name, epsilon, refinement, solution_exponent, duhamel_strategy, halvings
          [output] dir, plots, jobs, seed"""


def show_campaigns():
    """Display the campaigns and the experiment document grammar."""
    print("Singular Mass Lab - Campaigns")
    print("=" * 60)
    print()
    width = max(len(name) for name in CAMPAIGNS)
    for name in CAMPAIGNS:
        print(f"  {name:<{width}}  {_CAMPAIGN_HELP[name]}")
    print(f"  {'all':<{width}}  every campaign above (consistency only for regular g)")
    print()
    print(_GRAMMAR)


def show_version_info():
    """Display detailed version information."""
    print(f"singular-mass-lab {get_cached_version()}")
