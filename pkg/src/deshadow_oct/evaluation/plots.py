from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd
from rich.console import Console
import seaborn as sns

from deshadow_oct.const.column import ColumnNames, Method

console = Console()

# --- constants ---

_PLOT_RCPARAMS: dict[str, object] = {
    "font.size": 14,
    "axes.titlesize": 16,
    "axes.labelsize": 14,
    "xtick.labelsize": 12,
    "ytick.labelsize": 12,
    "legend.fontsize": 12,
    "figure.dpi": 150,
    "pdf.fonttype": 42,
    "ps.fonttype": 42,
}

_METHOD_COLORS = {
    Method.BASELINE.value: "#7f7f7f",
    Method.DESHADOWED.value: "#1f77b4",
    Method.COMPENSATED.value: "#ff7f0e",
}

_LAYER_ORDER = ["RNFL", "IPL", "PR", "RPE"]


def _setup_plot_style() -> None:
    plt.rcParams.update(_PLOT_RCPARAMS)


def plot_contrast_boxplot(per_image: pd.DataFrame, output_path: Path) -> None:
    """Intralayer contrast per layer, one box per method."""
    _setup_plot_style()
    methods = [m for m in _METHOD_COLORS if m in set(per_image[ColumnNames.METHOD.value])]
    layers = [lab for lab in _LAYER_ORDER if lab in set(per_image[ColumnNames.LAYER.value])]

    fig, ax = plt.subplots(figsize=(10, 6))
    sns.boxplot(
        data=per_image,
        x=ColumnNames.LAYER.value,
        y=ColumnNames.CONTRAST.value,
        hue=ColumnNames.METHOD.value,
        order=layers,
        hue_order=methods,
        palette={m: _METHOD_COLORS[m] for m in methods},
        linewidth=1.2,
        fliersize=3,
        ax=ax,
    )
    ax.set_xlabel("Layer", labelpad=10)
    ax.set_ylabel("Intralayer contrast", labelpad=10)
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3, linestyle="--")
    ax.legend(loc="upper right", frameon=True)

    plt.tight_layout()
    plt.savefig(output_path, dpi=300, bbox_inches="tight", facecolor="white", edgecolor="none")
    plt.close(fig)
    console.print(f"[green]Contrast boxplot saved to:[/green] {output_path}")


def plot_profiles(profiles: pd.DataFrame, stem: str, output_path: Path) -> None:
    """Lateral intensity profiles of one image, a panel per layer."""
    _setup_plot_style()
    df = profiles[profiles[ColumnNames.STEM.value] == stem]
    layers = [lab for lab in _LAYER_ORDER if lab in set(df[ColumnNames.LAYER.value])]
    if not layers:
        return

    fig, axes = plt.subplots(len(layers), 1, figsize=(10, 3 * len(layers)), sharex=True)
    axes = [axes] if len(layers) == 1 else list(axes)
    for ax, layer in zip(axes, layers):
        sns.lineplot(
            data=df[df[ColumnNames.LAYER.value] == layer],
            x=ColumnNames.COLUMN.value,
            y=ColumnNames.INTENSITY.value,
            hue=ColumnNames.METHOD.value,
            palette=_METHOD_COLORS,
            linewidth=1.0,
            ax=ax,
        )
        ax.set_title(layer)
        ax.set_ylabel("Mean intensity")
        ax.grid(True, alpha=0.3, linestyle="--")
    axes[-1].set_xlabel("Column (A-scan)")

    plt.tight_layout()
    plt.savefig(output_path, dpi=300, bbox_inches="tight", facecolor="white", edgecolor="none")
    plt.close(fig)
    console.print(f"[green]Profiles saved to:[/green] {output_path}")
