/* block comment with function inside() {} */
function real() { return "}"; }
