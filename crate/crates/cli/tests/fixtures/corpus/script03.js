export default function main() {
  const re = /[}{]/g;
  return 'x'.replace(re, '');
}
