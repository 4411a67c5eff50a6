#!/usr/bin/env python3
"""Generate the synthetic rotation pair used by configs/rotation48.json.

Writes template.pgm and reference.pgm (the template rotated by 40 degrees)
into data/rotation48/.
"""

import os
import sys

from laplift.images import make_texture_image, save_pgm, synth_rotation


def main(out_dir="data/rotation48"):
    os.makedirs(out_dir, exist_ok=True)
    template = make_texture_image((48, 48), seed=7, smooth=3.2, taper_radius=15.5)
    reference = synth_rotation(template, 40.0)
    save_pgm(template, os.path.join(out_dir, "template.pgm"), maxval=65535)
    save_pgm(reference, os.path.join(out_dir, "reference.pgm"), maxval=65535)
    print("wrote %s/{template,reference}.pgm" % out_dir)


if __name__ == "__main__":
    main(*sys.argv[1:])
