// Generated bitmap font (8x12 cells, ASCII 32-126), derived from
// Pillow's built-in raster font; rows are LSB-left bitmasks.
export const FONT_WIDTH = 8;
export const FONT_HEIGHT = 12;
export const FONT_START = 32;
export const FONT_ROWS: number[] = [
  0,0,0,0,0,0,0,0,0,0,0,0, // ' '
  0,0,2,2,2,2,2,2,0,2,0,0, // '!'
  0,0,6,6,6,0,0,0,0,0,0,0, // '"'
  0,0,20,20,4,30,12,30,10,2,0,0, // '#'
  0,8,28,62,42,14,28,40,42,28,8,0, // '$'
  0,0,39,53,21,10,40,84,86,114,0,0, // '%'
  0,0,28,2,34,124,38,34,34,60,0,0, // '&'
  0,0,1,1,1,0,0,0,0,0,0,0, // "'"
  0,0,4,2,2,2,2,2,2,4,4,0, // '('
  0,0,1,2,2,2,2,2,2,1,1,0, // ')'
  0,0,0,0,0,8,8,28,20,0,0,0, // '*'
  0,0,0,0,8,8,62,8,8,0,0,0, // '+'
  0,0,0,0,0,0,0,0,0,1,0,0, // ','
  0,0,0,0,0,0,3,0,0,0,0,0, // '-'
  0,0,0,0,0,0,0,0,0,1,0,0, // '.'
  0,0,4,4,0,2,2,2,1,1,0,0, // '/'
  0,0,14,27,17,17,17,17,27,14,0,0, // '0'
  0,0,12,14,8,8,8,8,8,8,0,0, // '1'
  0,0,14,18,16,16,8,4,2,31,0,0, // '2'
  0,0,14,19,16,12,16,17,17,14,0,0, // '3'
  0,0,16,24,20,20,18,62,16,16,0,0, // '4'
  0,0,30,2,1,15,19,16,17,14,0,0, // '5'
  0,0,14,19,17,15,17,17,17,14,0,0, // '6'
  0,0,31,24,8,8,4,4,2,2,0,0, // '7'
  0,0,14,17,17,14,17,17,17,14,0,0, // '8'
  0,0,14,17,17,17,30,17,25,14,0,0, // '9'
  0,0,0,0,1,0,0,0,0,1,0,0, // ':'
  0,0,0,0,1,0,0,0,1,1,0,0, // ';'
  0,0,0,0,0,24,6,6,8,16,0,0, // '<'
  0,0,0,0,0,30,0,30,0,0,0,0, // '='
  0,0,0,0,0,6,24,24,4,2,0,0, // '>'
  0,0,6,9,8,8,4,4,0,4,0,0, // '?'
  0,0,112,140,116,90,74,106,242,4,120,0, // '@'
  0,0,12,28,20,20,30,34,34,33,0,0, // 'A'
  0,0,30,34,34,2,62,34,34,30,0,0, // 'B'
  0,0,30,34,33,1,1,33,34,30,0,0, // 'C'
  0,0,30,34,66,66,66,66,34,30,0,0, // 'D'
  0,0,62,2,2,2,30,2,2,62,0,0, // 'E'
  0,0,62,2,2,2,30,2,2,2,0,0, // 'F'
  0,0,30,50,33,1,57,33,50,62,0,0, // 'G'
  0,0,66,66,66,66,126,66,66,66,0,0, // 'H'
  0,0,2,2,2,2,2,2,2,2,0,0, // 'I'
  0,0,16,16,16,16,16,18,18,12,0,0, // 'J'
  0,0,34,18,26,14,14,26,18,34,0,0, // 'K'
  0,0,2,2,2,2,2,2,2,62,0,0, // 'L'
  0,0,198,198,198,170,170,170,186,146,0,0, // 'M'
  0,0,70,70,74,74,82,82,98,98,0,0, // 'N'
  0,0,30,34,65,65,65,65,34,30,0,0, // 'O'
  0,0,30,34,34,34,30,2,2,2,0,0, // 'P'
  0,0,30,34,65,65,65,65,34,124,0,0, // 'Q'
  0,0,30,34,34,34,30,50,34,34,0,0, // 'R'
  0,0,28,34,2,12,56,32,34,28,0,0, // 'S'
  0,0,62,8,8,8,8,8,8,8,0,0, // 'T'
  0,0,34,34,34,34,34,34,34,28,0,0, // 'U'
  0,0,35,34,34,18,20,20,12,12,0,0, // 'V'
  0,0,49,51,50,42,234,202,204,196,0,0, // 'W'
  0,0,34,18,20,12,12,20,18,35,0,0, // 'X'
  0,0,34,34,20,28,8,8,8,8,0,0, // 'Y'
  0,0,62,48,16,8,8,4,6,62,0,0, // 'Z'
  0,6,2,2,2,2,2,2,2,2,6,0, // '['
  0,0,1,1,0,2,2,2,4,4,0,0, // '\\'
  0,3,2,2,2,2,2,2,2,2,3,0, // ']'
  0,0,0,0,12,12,18,18,0,0,0,0, // '^'
  0,0,0,0,0,0,0,0,0,0,14,0, // '_'
  0,0,0,2,0,0,0,0,0,0,0,0, // '`'
  0,0,0,0,14,9,14,11,9,15,0,0, // 'a'
  0,0,2,2,30,34,34,34,34,30,0,0, // 'b'
  0,0,0,0,14,25,1,1,25,14,0,0, // 'c'
  0,0,16,16,30,17,17,17,17,30,0,0, // 'd'
  0,0,0,0,14,17,31,1,17,14,0,0, // 'e'
  0,4,6,2,7,2,2,2,2,2,0,0, // 'f'
  0,0,0,0,30,17,17,17,17,30,17,14, // 'g'
  0,0,2,2,30,38,34,34,34,34,0,0, // 'h'
  0,0,2,0,2,2,2,2,2,2,0,0, // 'i'
  0,0,0,0,2,2,2,2,2,2,2,3, // 'j'
  0,0,2,2,18,10,14,14,26,18,0,0, // 'k'
  0,0,2,2,2,2,2,2,2,6,0,0, // 'l'
  0,0,0,0,254,146,146,146,146,146,0,0, // 'm'
  0,0,0,0,30,38,34,34,34,34,0,0, // 'n'
  0,0,0,0,14,17,17,17,17,14,0,0, // 'o'
  0,0,0,0,30,34,34,34,34,30,2,2, // 'p'
  0,0,0,0,30,17,17,17,17,30,16,16, // 'q'
  0,0,0,0,14,2,2,2,2,2,0,0, // 'r'
  0,0,0,0,7,9,3,12,9,15,0,0, // 's'
  0,0,2,2,7,2,2,2,2,6,0,0, // 't'
  0,0,0,0,34,34,34,34,50,60,0,0, // 'u'
  0,0,0,0,17,19,10,10,14,4,0,0, // 'v'
  0,0,0,0,153,89,90,86,102,38,0,0, // 'w'
  0,0,0,0,9,10,6,6,10,25,0,0, // 'x'
  0,0,0,0,17,19,10,10,14,4,4,2, // 'y'
  0,0,0,0,30,24,8,4,6,30,0,0, // 'z'
  0,6,2,2,2,2,2,2,2,2,6,0, // '{'
  0,2,2,2,2,2,2,2,2,2,2,2, // '|'
  0,3,2,2,2,2,2,2,2,2,3,0, // '}'
  0,0,0,0,0,0,38,26,0,0,0,0, // '~'
];
