// 8-wide bitmap glyphs (rows as bitmasks, LSB = leftmost pixel),
// generated from Pillow's built-in bitmap font.

export const GLYPH_WIDTH = 8;
export const GLYPH_HEIGHT = 11;

export const GLYPHS: Record<string, number[]> = {
  " ": [0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
  "!": [0, 2, 2, 2, 2, 2, 0, 0, 2, 0, 0],
  "\"": [0, 6, 6, 6, 0, 0, 0, 0, 0, 0, 0],
  "#": [0, 20, 12, 12, 30, 10, 30, 10, 6, 0, 0],
  "$": [8, 28, 42, 42, 14, 24, 40, 42, 28, 8, 0],
  "%": [0, 78, 42, 42, 30, 240, 168, 164, 228, 0, 0],
  "&": [0, 28, 2, 34, 124, 34, 34, 34, 60, 0, 0],
  "'": [0, 2, 2, 2, 0, 0, 0, 0, 0, 0, 0],
  "(": [0, 4, 2, 2, 2, 2, 2, 2, 4, 4, 0],
  ")": [0, 0, 1, 1, 1, 1, 1, 1, 0, 0, 0],
  "*": [0, 0, 0, 0, 8, 42, 28, 20, 0, 0, 0],
  "+": [0, 0, 0, 8, 8, 62, 8, 8, 0, 0, 0],
  ",": [0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0],
  "-": [0, 0, 0, 0, 0, 3, 0, 0, 0, 0, 0],
  ".": [0, 0, 0, 0, 0, 0, 0, 0, 2, 0, 0],
  "/": [0, 2, 2, 1, 1, 1, 0, 0, 0, 0, 0],
  "0": [0, 28, 54, 34, 34, 34, 34, 54, 28, 0, 0],
  "1": [0, 12, 10, 8, 8, 8, 8, 8, 8, 0, 0],
  "2": [0, 12, 18, 16, 16, 8, 4, 2, 31, 0, 0],
  "3": [0, 14, 17, 16, 12, 16, 17, 17, 14, 0, 0],
  "4": [0, 16, 24, 20, 20, 18, 63, 16, 16, 0, 0],
  "5": [0, 30, 1, 1, 13, 19, 16, 17, 14, 0, 0],
  "6": [0, 28, 36, 34, 30, 34, 34, 34, 28, 0, 0],
  "7": [0, 31, 16, 8, 8, 4, 4, 2, 2, 0, 0],
  "8": [0, 28, 34, 34, 28, 34, 34, 34, 28, 0, 0],
  "9": [0, 28, 34, 34, 34, 60, 34, 18, 28, 0, 0],
  ":": [0, 0, 0, 2, 0, 0, 0, 0, 2, 0, 0],
  ";": [0, 0, 0, 2, 0, 0, 0, 0, 2, 1, 0],
  "<": [0, 0, 0, 0, 24, 6, 2, 12, 16, 0, 0],
  "=": [0, 0, 0, 0, 30, 0, 30, 0, 0, 0, 0],
  ">": [0, 0, 0, 0, 6, 24, 16, 12, 2, 0, 0],
  "?": [0, 12, 18, 18, 16, 8, 8, 0, 8, 0, 0],
  "@": [0, 112, 140, 116, 74, 74, 42, 218, 4, 120, 0],
  "A": [0, 8, 12, 20, 18, 30, 34, 34, 33, 0, 0],
  "B": [0, 30, 34, 34, 18, 62, 34, 34, 30, 0, 0],
  "C": [0, 56, 68, 66, 2, 2, 66, 68, 60, 0, 0],
  "D": [0, 30, 34, 66, 66, 66, 66, 34, 30, 0, 0],
  "E": [0, 62, 2, 2, 2, 30, 2, 2, 62, 0, 0],
  "F": [0, 62, 2, 2, 2, 30, 2, 2, 2, 0, 0],
  "G": [0, 56, 100, 66, 2, 114, 66, 100, 92, 0, 0],
  "H": [0, 66, 66, 66, 66, 126, 66, 66, 66, 0, 0],
  "I": [0, 2, 2, 2, 2, 2, 2, 2, 2, 0, 0],
  "J": [0, 16, 16, 16, 16, 16, 18, 18, 12, 0, 0],
  "K": [0, 34, 18, 10, 10, 14, 10, 18, 34, 0, 0],
  "L": [0, 2, 2, 2, 2, 2, 2, 2, 62, 0, 0],
  "M": [0, 198, 198, 198, 170, 170, 170, 154, 146, 0, 0],
  "N": [0, 38, 38, 38, 42, 42, 42, 50, 50, 0, 0],
  "O": [0, 56, 68, 130, 130, 130, 130, 68, 56, 0, 0],
  "P": [0, 30, 34, 34, 34, 30, 2, 2, 2, 0, 0],
  "Q": [0, 56, 68, 130, 130, 130, 130, 68, 248, 0, 0],
  "R": [0, 30, 34, 34, 34, 30, 50, 34, 34, 0, 0],
  "S": [0, 28, 34, 2, 4, 56, 32, 34, 28, 0, 0],
  "T": [0, 62, 8, 8, 8, 8, 8, 8, 8, 0, 0],
  "U": [0, 34, 34, 34, 34, 34, 34, 34, 28, 0, 0],
  "V": [0, 33, 34, 34, 18, 20, 20, 12, 8, 0, 0],
  "W": [0, 49, 50, 50, 42, 170, 202, 204, 196, 0, 0],
  "X": [0, 34, 18, 20, 12, 12, 20, 18, 34, 0, 0],
  "Y": [0, 34, 34, 20, 20, 8, 8, 8, 8, 0, 0],
  "Z": [0, 62, 32, 16, 8, 8, 4, 2, 62, 0, 0],
  "[": [6, 2, 2, 2, 2, 2, 2, 2, 2, 6, 0],
  "\\": [0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 0],
  "]": [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0],
  "^": [0, 0, 0, 12, 10, 10, 18, 0, 0, 0, 0],
  "_": [0, 0, 0, 0, 0, 0, 0, 0, 0, 31, 0],
  "`": [0, 0, 2, 0, 0, 0, 0, 0, 0, 0, 0],
  "a": [0, 0, 0, 28, 18, 24, 22, 18, 30, 0, 0],
  "b": [0, 2, 2, 30, 34, 34, 34, 34, 30, 0, 0],
  "c": [0, 0, 0, 28, 34, 2, 2, 34, 28, 0, 0],
  "d": [0, 32, 32, 60, 34, 34, 34, 34, 60, 0, 0],
  "e": [0, 0, 0, 28, 34, 62, 2, 34, 28, 0, 0],
  "f": [4, 2, 2, 7, 2, 2, 2, 2, 2, 0, 0],
  "g": [0, 0, 0, 60, 34, 34, 34, 34, 60, 34, 28],
  "h": [0, 2, 2, 30, 38, 34, 34, 34, 34, 0, 0],
  "i": [0, 2, 0, 2, 2, 2, 2, 2, 2, 0, 0],
  "j": [0, 2, 0, 2, 2, 2, 2, 2, 2, 2, 3],
  "k": [0, 2, 2, 18, 10, 6, 10, 10, 18, 0, 0],
  "l": [0, 2, 2, 2, 2, 2, 2, 2, 6, 0, 0],
  "m": [0, 0, 0, 238, 146, 146, 146, 146, 146, 0, 0],
  "n": [0, 0, 0, 30, 38, 34, 34, 34, 34, 0, 0],
  "o": [0, 0, 0, 28, 34, 34, 34, 34, 28, 0, 0],
  "p": [0, 0, 0, 30, 34, 34, 34, 34, 30, 2, 2],
  "q": [0, 0, 0, 60, 34, 34, 34, 34, 60, 32, 32],
  "r": [0, 0, 0, 14, 2, 2, 2, 2, 2, 0, 0],
  "s": [0, 0, 0, 14, 18, 6, 24, 18, 30, 0, 0],
  "t": [0, 2, 2, 7, 2, 2, 2, 2, 6, 0, 0],
  "u": [0, 0, 0, 34, 34, 34, 34, 50, 60, 0, 0],
  "v": [0, 0, 0, 17, 17, 10, 10, 10, 4, 0, 0],
  "w": [0, 0, 0, 153, 89, 90, 86, 102, 36, 0, 0],
  "x": [0, 0, 0, 4, 5, 2, 3, 5, 4, 0, 0],
  "y": [0, 0, 0, 17, 17, 10, 10, 10, 4, 4, 2],
  "z": [0, 0, 0, 30, 16, 8, 4, 2, 30, 0, 0],
  "{": [6, 2, 2, 2, 2, 2, 2, 2, 2, 6, 0],
  "|": [2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2],
  "}": [3, 2, 2, 2, 2, 2, 2, 2, 2, 3, 0],
  "~": [0, 0, 0, 0, 0, 22, 26, 0, 0, 0, 0],
};
