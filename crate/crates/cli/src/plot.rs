use crate::output::Artifact;

/// A stand-alone matplotlib script that plots every numeric column of the
/// command's CSV against the first one.
pub fn plot_script(command: &str, csv_name: &str) -> Artifact {
    let script = format!(
        r##"#!/usr/bin/env python3
# Plots the columns of {csv_name} written by `wtoda {command}`.
import sys
import pandas as pd
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
df = pd.read_csv(path, comment="#")
x = df.columns[0]
cols = [c for c in df.columns[1:] if pd.api.types.is_numeric_dtype(df[c])]
fig, axes = plt.subplots(len(cols), 1, figsize=(7, 2.2 * max(len(cols), 1)), sharex=True, squeeze=False)
for ax, c in zip(axes[:, 0], cols):
    ax.plot(df[x], df[c], ".", ms=2)
    ax.set_ylabel(c)
axes[-1, 0].set_xlabel(x)
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
"##
    );
    Artifact { name: format!("plot_{command}.py"), bytes: script.into_bytes() }
}
