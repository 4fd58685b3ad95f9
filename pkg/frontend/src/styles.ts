/** Fixed style constants so identical inputs render identical images. */

export const WIDTH = 760;
export const HEIGHT = 480;
export const MARGIN = { left: 70, right: 20, top: 32, bottom: 52 };

export const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
];

export const AXIS_COLOR = "#222222";
export const GRID_COLOR = "#d8d8d8";
export const BACKGROUND = "#ffffff";
export const FONT_SIZE = 12;
export const TITLE_SIZE = 14;
