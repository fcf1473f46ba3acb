document.querySelectorAll('img').forEach(function (img) { img.alt = img.alt || ''; });
